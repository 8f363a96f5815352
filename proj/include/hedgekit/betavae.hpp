#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hedgekit/error.hpp"
#include "hedgekit/marketdata.hpp"

namespace hedgekit {

/// Training settings for the hedging VAE. beta_hat weighs the KL term
/// (unrelated to the hedge ratios themselves).
struct VaeConfig {
    std::vector<int> hidden_layers{16, 8};
    double beta_hat = 0.01;
    double learning_rate = 1e-3;
    int epochs = 5000;
    int batch_size = 32;
    std::uint64_t seed = 7;
    int kl_anneal_epochs = 500;
    double momentum = 0.9;
    double clip_norm = 10.0;
    bool standardize = true;
};

/// Affine layer y = x * weights + bias, weights stored in x out.
struct DenseLayer {
    MatrixXd weights;
    VectorXd bias;
};

struct VaeParameters {
    std::vector<DenseLayer> encoder;   ///< tanh layers
    DenseLayer mu_head;
    DenseLayer logvar_head;
    /// N x (N+1), no bias: the first N columns reconstruct the instruments
    /// (gamma), the last reconstructs the target (alpha).
    MatrixXd decoder;

    Eigen::Index latent_dim() const { return decoder.rows(); }
    Eigen::Index parameter_count() const;
};

struct EpochStats {
    double reconstruction = 0.0;  ///< mean squared error summed over N+1 outputs, per sample
    double kl = 0.0;              ///< sum over latents of KL, per sample
    double kl_weight = 0.0;       ///< annealed beta_hat used this epoch
    double total = 0.0;
};

struct VaeModel {
    VaeParameters params;
    /// Column statistics in output order (instruments..., target); inputs
    /// are (value - mean) / scale.
    VectorXd mean;
    VectorXd scale;
    std::vector<EpochStats> history;
    std::uint64_t seed = 0;

    Eigen::Index instruments() const { return params.decoder.rows(); }
};

/// Raised by train() when the loss turns non-finite; keeps the epochs run so far.
class VaeDivergence : public HedgeError {
public:
    VaeDivergence(const std::string& msg, std::vector<EpochStats> history)
        : HedgeError(ErrorCode::NonFiniteLoss, msg), history_(std::move(history)) {}
    const std::vector<EpochStats>& history() const { return history_; }

private:
    std::vector<EpochStats> history_;
};

struct LossBreakdown {
    double reconstruction = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

/// KL(N(mu, sigma^2) || N(0, 1)).
double kl_std_normal(double mu, double sigma);

/// Randomly initialized parameters for n instruments.
VaeParameters init_parameters(Eigen::Index n, const std::vector<int>& hidden, std::uint64_t seed);

/// Batch-mean loss on (inputs B x N, targets B x (N+1)) using the supplied
/// standard-normal draws (B x N) for the reparameterization. Writes exact
/// gradients to *grad when non-null. With `deterministic` the latent is mu.
LossBreakdown loss_and_gradient(const VaeParameters& params, const MatrixXd& inputs,
                                const MatrixXd& targets, const MatrixXd& noise, double kl_weight,
                                VaeParameters* grad, bool deterministic = false);

/// Encoder mean and log-variance for each input row.
void encode(const VaeParameters& params, const MatrixXd& inputs, MatrixXd& mu, MatrixXd& logvar);
/// Latent rows through the linear decoder.
MatrixXd decode(const VaeParameters& params, const MatrixXd& latents);

VectorXd flatten(const VaeParameters& params);
void assign(VaeParameters& params, const VectorXd& flat);

VaeModel train(const ReturnPanel& panel, const VaeConfig& config);

/// Independent trainings with seeds config.seed + r, returned in seed order.
std::vector<VaeModel> train_restarts(const ReturnPanel& panel, const VaeConfig& config,
                                     int restarts);

/// beta solving gamma * beta = alpha from the decoder, mapped back to the
/// panel's return units.
VectorXd extract_hedge_vae(const VaeModel& model, double max_condition = 1e10);

/// Plain-text dump: header, statistics, then every tensor as
/// `tensor <name> <rows> <cols>` followed by one line per row.
void write_model(std::ostream& out, const VaeModel& model);
VaeModel read_model(std::istream& in);

}  // namespace hedgekit
