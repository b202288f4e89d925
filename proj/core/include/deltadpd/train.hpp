#ifndef DELTADPD_TRAIN_HPP
#define DELTADPD_TRAIN_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "deltadpd/delta.hpp"
#include "deltadpd/rnn.hpp"
#include "deltadpd/signal.hpp"

namespace deltadpd {

using DpdModelD = DpdModelT<double>;
using VecXd = Eigen::VectorXd;

struct TrainConfig {
    int epochs = 200;
    double lr0 = 5e-3;
    int batch_size = 64;
    int frame_length = 256; // BPTT window
    int frame_stride = 0;   // 0 = frame_length / 2 (overlapping windows)
    double weight_decay = 0.0;
    int plateau_patience = 10;
    double plateau_factor = 0.5;
    double plateau_min_delta_db = 0.01;
    std::uint64_t seed = 0;
    double target_gain = 1.0; // linearization target is G * x
    int n_threads = 1;
    std::optional<ThresholdConfig> delta_thresholds; // set => delta fine-tuning

    void validate() const;
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_nmse_db;
    std::vector<double> lr;
    int best_epoch = -1;
    double best_val_nmse_db = 0.0;
};

/// Adaptive-moment optimizer with decoupled weight decay over a flat
/// parameter vector. Weight decay shrinks parameters directly and never
/// enters the moment estimates.
class AdamW {
  public:
    AdamW(Eigen::Index n_params, double lr, double weight_decay, double beta1 = 0.9,
          double beta2 = 0.999, double eps = 1e-8);

    void step(VecXd& params, const VecXd& grads);
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

  private:
    double lr_, wd_, beta1_, beta2_, eps_;
    VecXd m_, v_;
    std::int64_t t_ = 0;
};

/// Reduce-on-plateau: multiply lr by `factor` when the watched value (dB,
/// lower is better) has not improved by at least min_delta for `patience`
/// consecutive epochs.
class PlateauScheduler {
  public:
    PlateauScheduler(double lr0, int patience, double factor, double min_delta_db)
        : lr_(lr0), patience_(patience), factor_(factor), min_delta_(min_delta_db) {}

    double observe(double val_nmse_db);
    double lr() const { return lr_; }

  private:
    double lr_;
    int patience_;
    double factor_, min_delta_;
    double best_ = 1e300;
    int stale_ = 0;
};

// Flat parameter vector <-> model, in a fixed array order shared with the
// optimizer and the gradient containers.
VecXd flatten(const DpdModelD& m);
void unflatten(const VecXd& v, DpdModelD& m);
DpdModelD zeros_like(const DpdModelD& m);

struct FrameGrad {
    DpdModelD grads;
    double loss = 0.0;
};

/// Exact gradients of the mean-squared frame loss w.r.t. every DPD
/// parameter, backpropagated through the unrolled DPD recurrence, the
/// feature map of its output, and (when `pa` is non-null) the frozen PA
/// behavioral model. Hidden states reset at frame start.
/// With `delta` set, the forward pass applies the delta rule and the
/// backward treats the thresholding as identity (straight-through).
FrameGrad bptt_gradients(const DpdModelD& model, const DpdModelD* pa, const FeatureSeq& feats,
                         const std::vector<cplx>& targets, std::size_t start, int len,
                         const ThresholdConfig* delta = nullptr);

/// Cascade output pa(features(model(feats))) -- or just model(feats) when
/// pa is null -- evaluated densely in FP64 with per-frame state resets
/// matching training.
IqSignal cascade_forward(const DpdModelD& model, const DpdModelD* pa, const FeatureSeq& feats,
                         const ThresholdConfig* delta = nullptr);

/// End-to-end DPD training through a frozen behavioral model. Returns the
/// model with best validation NMSE and the per-epoch report.
std::pair<DpdModelD, TrainReport> train_dpd(const DpdModelD& pa_behav, DpdModelD init,
                                            const Dataset& data, const TrainConfig& cfg);

/// GRU behavioral model of the PA fitted to (input, PA output) data.
std::pair<DpdModelD, TrainReport> fit_behavioral(const Dataset& data, int hidden_size,
                                                 const TrainConfig& cfg);

/// Continue training a dense-trained model with active delta thresholds
/// (straight-through backward).
std::pair<DpdModelD, TrainReport> finetune_with_delta(const DpdModelD& model,
                                                      const DpdModelD& pa_behav,
                                                      const Dataset& data, TrainConfig cfg);

} // namespace deltadpd

#endif
