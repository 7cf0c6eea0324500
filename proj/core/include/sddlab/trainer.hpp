#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sddlab/data.hpp"
#include "sddlab/optim.hpp"
#include "sddlab/param_set.hpp"
#include "sddlab/pruning.hpp"
#include "sddlab/vit.hpp"

namespace sddlab::train {

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;          // learning rate of the last step in the epoch
  double train_loss = 0.0;  // running mean over the epoch's minibatches
  double train_acc = 0.0;
};

struct RoundResult {
  std::vector<EpochLog> epochs;
  int epochs_trained = 0;
  double lr_final = 0.0;
  std::int64_t steps = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Mean cross-entropy and accuracy of the model on `dataset` against `labels`.
Evaluation evaluate(const vit::ViTConfig& config, const ParamSet<float>& params,
                    const data::Dataset& dataset, std::span<const int> labels,
                    std::size_t batch_size = 256);

// One full training round under `policy` with a fresh optimizer. Gradients
// of pruned coordinates are masked so they stay exactly zero. The minibatch
// order is drawn from `seed`. A non-finite loss raises NumericError.
RoundResult train_round(const vit::ViTConfig& config, ParamSet<float>& params,
                        const pruning::PruneMask& mask, const optim::TrainPolicy& policy,
                        const data::Dataset& train, std::span<const int> labels,
                        std::uint64_t seed, const EpochCallback& on_epoch = {});

}  // namespace sddlab::train
