#include "ttdsr/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ttdsr {

std::vector<TrainingPair> build_training_set(const std::vector<ImagePlane>& sources,
                                             const TrainSettings& settings) {
  std::vector<ImagePlane> variants;
  variants.reserve(sources.size() * 12);
  for (const ImagePlane& src : sources) {
    for (ImagePlane& v : augment(src)) variants.push_back(std::move(v));
  }
  std::vector<TrainingPair> pairs = extract_patches(variants, settings.patch,
                                                    settings.stride, settings.scale,
                                                    settings.seed);
  if (settings.limit_patches > 0 &&
      pairs.size() > static_cast<size_t>(settings.limit_patches)) {
    pairs.resize(static_cast<size_t>(settings.limit_patches));
  }
  return pairs;
}

void fill_batch(const std::vector<TrainingPair>& pairs,
                const std::vector<size_t>& order, size_t first, size_t count,
                ad::Tensor& lr_batch, ad::Tensor& hr_batch) {
  const ImagePlane& proto = pairs[order[first]].hr;
  const int h = proto.height();
  const int w = proto.width();
  const size_t plane = static_cast<size_t>(h) * w;
  lr_batch = ad::Tensor::zeros({static_cast<int>(count), 1, h, w});
  hr_batch = ad::Tensor::zeros({static_cast<int>(count), 1, h, w});
  auto lr_data = lr_batch.data();
  auto hr_data = hr_batch.data();
  for (size_t i = 0; i < count; ++i) {
    const TrainingPair& pair = pairs[order[first + i]];
    if (pair.hr.height() != h || pair.hr.width() != w) {
      throw std::invalid_argument("fill_batch: patches have mixed dimensions");
    }
    std::copy(pair.lr.pixels().begin(), pair.lr.pixels().end(),
              lr_data.begin() + i * plane);
    std::copy(pair.hr.pixels().begin(), pair.hr.pixels().end(),
              hr_data.begin() + i * plane);
  }
}

TrainResult train_network(TtdsrNetwork& net, const std::vector<TrainingPair>& pairs,
                          const TrainSettings& settings, const EpochCallback& on_epoch) {
  if (pairs.empty()) throw std::invalid_argument("train_network: no training pairs");
  if (settings.epochs < 1 || settings.batch_size < 1) {
    throw std::invalid_argument("train_network: epochs and batch_size must be >= 1");
  }

  ad::AdamConfig adam_config;
  adam_config.learning_rate = settings.learning_rate;
  ad::AdamState adam(net.parameters(), adam_config);

  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  ad::SplitMix64 shuffle_rng(settings.seed ^ 0x5eedULL);

  TrainResult result;
  result.epochs.reserve(static_cast<size_t>(settings.epochs));
  for (int epoch = 1; epoch <= settings.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(shuffle_rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    int steps = 0;
    for (size_t first = 0; first < order.size();
         first += static_cast<size_t>(settings.batch_size)) {
      const size_t count =
          std::min(static_cast<size_t>(settings.batch_size), order.size() - first);
      ad::Tensor lr_batch, hr_batch;
      fill_batch(pairs, order, first, count, lr_batch, hr_batch);
      loss_sum += net.training_step(lr_batch, hr_batch, adam, settings.lambda);
      ++steps;
    }
    const EpochLoss entry{epoch, loss_sum / steps};
    result.epochs.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

}  // namespace ttdsr
