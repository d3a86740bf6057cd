// SPDX-License-Identifier: Apache-2.0
#pragma once

// The three training stages, run in order: orientation, LUT transformer, reconstruction.
// Each earlier stage is frozen while later stages train. Every step writes one JSON
// line (stage, step, loss components) to the log stream when one is given.

#include "upright/dataset.hpp"
#include "upright/models.hpp"

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace upright {

enum class Stage { Orientation, LutFormer, Reconstruction };

std::string to_string(Stage s);
/// Accepts orientation | lutformer | recon.
Stage parse_stage(const std::string& s);

/// Non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainSchedule {
    int steps = 100;
    int batch = 8;
    double lr = 2e-4;
    double disc_lr = 1e-4;  // reconstruction stage only
    std::uint64_t seed = 1;
};

struct TrainResult {
    std::vector<double> losses;  // total loss per step
};

/// Draws batches from a shuffled epoch order; reshuffles when exhausted.
class BatchSampler {
public:
    BatchSampler(std::size_t size, std::uint64_t seed);
    std::vector<std::size_t> next(int batch);

private:
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    nn::Rng rng_;
};

/// Adam on the angle loss. Throws DatasetError for an empty record set.
TrainResult train_orientation(OrientationNet& net, const std::vector<DatasetRecord>& records, const TrainSchedule& s,
                              const LossWeights& w, std::ostream* log = nullptr);

/// SGD on the LUT loss against the records' analytic LUTs. `frozen` (if any) is
/// frozen for the duration and left frozen.
TrainResult train_lutformer(LutFormer& net, const std::vector<DatasetRecord>& records, const TrainSchedule& s,
                            const LossWeights& w, std::ostream* log = nullptr, OrientationNet* frozen = nullptr);

/// Alternating discriminator / generator Adam steps. Inputs are the orientation
/// net's shallow features rotated upright by the LutFormer LUT (or by the analytic
/// LUT when `analytic_lut`); targets are the upright images.
TrainResult train_reconstruction(Generator& gen, PatchDiscriminator& disc, OrientationNet& orient, LutFormer& lut,
                                 const std::vector<DatasetRecord>& records, const TrainSchedule& s,
                                 const LossWeights& w, std::ostream* log = nullptr, bool analytic_lut = false);

/// Upright shallow-feature batch used by the reconstruction stage.
TensorF upright_features(const OrientationNet& orient, const LutFormer* lut, const std::vector<const DatasetRecord*>& batch);

/// Angular error (degrees) between predicted and true orientation for each record.
std::vector<double> orientation_errors(const OrientationNet& net, const std::vector<DatasetRecord>& records);

}  // namespace upright
