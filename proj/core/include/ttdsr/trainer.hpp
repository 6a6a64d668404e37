#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ttdsr/data.hpp"
#include "ttdsr/network.hpp"

namespace ttdsr {

struct TrainSettings {
  int epochs = 100;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double lambda = 0.01;
  int scale = 3;
  int patch = 32;
  int stride = 16;
  int limit_patches = 0;  // 0 keeps every extracted patch
  std::uint64_t seed = 0;
};

struct EpochLoss {
  int epoch = 0;        // 1-based
  double mean_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochLoss> epochs;
};

/// Augments each source (12 variants), extracts aligned degraded patch
/// pairs on the grid, shuffles them by seed and applies the patch limit.
/// Sources are expected as [0,1] luminance planes.
std::vector<TrainingPair> build_training_set(const std::vector<ImagePlane>& sources,
                                             const TrainSettings& settings);

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Runs the optimization loop over the pairs: per-epoch deterministic
/// reshuffle, batched steps, per-epoch mean loss. Divergence aborts via
/// DivergedError from the step itself.
TrainResult train_network(TtdsrNetwork& net, const std::vector<TrainingPair>& pairs,
                          const TrainSettings& settings,
                          const EpochCallback& on_epoch = {});

/// Stacks pairs [first, first+count) into batch tensors.
void fill_batch(const std::vector<TrainingPair>& pairs,
                const std::vector<size_t>& order, size_t first, size_t count,
                ad::Tensor& lr_batch, ad::Tensor& hr_batch);

}  // namespace ttdsr
