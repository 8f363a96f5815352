#include "hedgekit/betavae.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "hedgekit/error.hpp"
#include "hedgekit/factors.hpp"
#include "hedgekit/rng.hpp"

namespace hedgekit {
namespace {

DenseLayer random_layer(Eigen::Index in, Eigen::Index out, Rng& rng) {
    DenseLayer layer;
    layer.weights.resize(in, out);
    const double scale = std::sqrt(1.0 / static_cast<double>(in));
    for (Eigen::Index c = 0; c < out; ++c) {
        for (Eigen::Index r = 0; r < in; ++r) layer.weights(r, c) = scale * rng.normal();
    }
    layer.bias = VectorXd::Zero(out);
    return layer;
}

DenseLayer zeros_like(const DenseLayer& layer) {
    return {MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
            VectorXd::Zero(layer.bias.size())};
}

VaeParameters zeros_like(const VaeParameters& p) {
    VaeParameters z;
    for (const auto& layer : p.encoder) z.encoder.push_back(zeros_like(layer));
    z.mu_head = zeros_like(p.mu_head);
    z.logvar_head = zeros_like(p.logvar_head);
    z.decoder = MatrixXd::Zero(p.decoder.rows(), p.decoder.cols());
    return z;
}

MatrixXd affine(const MatrixXd& in, const DenseLayer& layer) {
    return (in * layer.weights).rowwise() + layer.bias.transpose();
}

template <typename Fn>
void for_each_tensor(const VaeParameters& p, Fn&& fn) {
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
        fn(fmt::format("encoder.{}.weight", l), p.encoder[l].weights);
        fn(fmt::format("encoder.{}.bias", l), MatrixXd(p.encoder[l].bias.transpose()));
    }
    fn(std::string("mu.weight"), p.mu_head.weights);
    fn(std::string("mu.bias"), MatrixXd(p.mu_head.bias.transpose()));
    fn(std::string("logvar.weight"), p.logvar_head.weights);
    fn(std::string("logvar.bias"), MatrixXd(p.logvar_head.bias.transpose()));
    fn(std::string("decoder.weight"), p.decoder);
}

}  // namespace

Eigen::Index VaeParameters::parameter_count() const {
    Eigen::Index total = decoder.size();
    for (const auto& l : encoder) total += l.weights.size() + l.bias.size();
    total += mu_head.weights.size() + mu_head.bias.size();
    total += logvar_head.weights.size() + logvar_head.bias.size();
    return total;
}

double kl_std_normal(double mu, double sigma) {
    if (!(sigma > 0.0)) {
        throw HedgeError(ErrorCode::NonPositiveSigma, fmt::format("sigma {} must be > 0", sigma));
    }
    return 0.5 * (mu * mu + sigma * sigma - 1.0 - 2.0 * std::log(sigma));
}

VaeParameters init_parameters(Eigen::Index n, const std::vector<int>& hidden, std::uint64_t seed) {
    if (n < 1) throw HedgeError(ErrorCode::ZeroInstruments, "VAE needs at least one instrument");
    Rng rng(seed);
    VaeParameters p;
    Eigen::Index width = n;
    for (int h : hidden) {
        if (h < 1) throw HedgeError(ErrorCode::InvalidArgument, "hidden widths must be positive");
        p.encoder.push_back(random_layer(width, h, rng));
        width = h;
    }
    p.mu_head = random_layer(width, n, rng);
    p.logvar_head = random_layer(width, n, rng);
    p.logvar_head.weights *= 0.1;
    p.decoder.resize(n, n + 1);
    const double scale = std::sqrt(1.0 / static_cast<double>(n));
    for (Eigen::Index c = 0; c < n + 1; ++c) {
        for (Eigen::Index r = 0; r < n; ++r) p.decoder(r, c) = scale * rng.normal();
    }
    return p;
}

void encode(const VaeParameters& params, const MatrixXd& inputs, MatrixXd& mu, MatrixXd& logvar) {
    MatrixXd a = inputs;
    for (const auto& layer : params.encoder) a = affine(a, layer).array().tanh().matrix();
    mu = affine(a, params.mu_head);
    logvar = affine(a, params.logvar_head);
}

MatrixXd decode(const VaeParameters& params, const MatrixXd& latents) {
    return latents * params.decoder;
}

LossBreakdown loss_and_gradient(const VaeParameters& params, const MatrixXd& inputs,
                                const MatrixXd& targets, const MatrixXd& noise, double kl_weight,
                                VaeParameters* grad, bool deterministic) {
    const double batch = static_cast<double>(inputs.rows());

    std::vector<MatrixXd> acts;
    acts.reserve(params.encoder.size() + 1);
    acts.push_back(inputs);
    for (const auto& layer : params.encoder) {
        acts.push_back(affine(acts.back(), layer).array().tanh().matrix());
    }
    const MatrixXd& top = acts.back();
    const MatrixXd mu = affine(top, params.mu_head);
    const MatrixXd logvar = affine(top, params.logvar_head);
    const MatrixXd sigma = (0.5 * logvar.array()).exp().matrix();
    const MatrixXd z =
        deterministic ? mu : MatrixXd(mu.array() + sigma.array() * noise.array());
    const MatrixXd diff = decode(params, z) - targets;

    LossBreakdown loss;
    loss.reconstruction = diff.squaredNorm() / batch;
    loss.kl = 0.5 * (mu.array().square() + logvar.array().exp() - 1.0 - logvar.array()).sum() / batch;
    loss.total = loss.reconstruction + kl_weight * loss.kl;
    if (grad == nullptr) return loss;

    *grad = zeros_like(params);
    const MatrixXd d_out = (2.0 / batch) * diff;
    grad->decoder = z.transpose() * d_out;
    const MatrixXd d_z = d_out * params.decoder.transpose();

    const MatrixXd d_mu = d_z + (kl_weight / batch) * mu;
    MatrixXd d_logvar = (0.5 * kl_weight / batch) * (logvar.array().exp() - 1.0).matrix();
    if (!deterministic) {
        d_logvar.array() += 0.5 * d_z.array() * noise.array() * sigma.array();
    }

    grad->mu_head.weights = top.transpose() * d_mu;
    grad->mu_head.bias = d_mu.colwise().sum().transpose();
    grad->logvar_head.weights = top.transpose() * d_logvar;
    grad->logvar_head.bias = d_logvar.colwise().sum().transpose();

    MatrixXd d_act = d_mu * params.mu_head.weights.transpose() +
                     d_logvar * params.logvar_head.weights.transpose();
    for (std::size_t l = params.encoder.size(); l-- > 0;) {
        const MatrixXd d_pre = (d_act.array() * (1.0 - acts[l + 1].array().square())).matrix();
        grad->encoder[l].weights = acts[l].transpose() * d_pre;
        grad->encoder[l].bias = d_pre.colwise().sum().transpose();
        d_act = d_pre * params.encoder[l].weights.transpose();
    }
    return loss;
}

VectorXd flatten(const VaeParameters& params) {
    VectorXd flat(params.parameter_count());
    Eigen::Index pos = 0;
    for_each_tensor(params, [&](const std::string&, const MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) flat(pos++) = m(r, c);
        }
    });
    return flat;
}

void assign(VaeParameters& params, const VectorXd& flat) {
    if (flat.size() != params.parameter_count()) {
        throw HedgeError(ErrorCode::LengthMismatch, "flat parameter vector has the wrong size");
    }
    Eigen::Index pos = 0;
    auto fill = [&](MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat(pos++);
        }
    };
    auto fill_vec = [&](VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = flat(pos++);
    };
    for (auto& layer : params.encoder) {
        fill(layer.weights);
        fill_vec(layer.bias);
    }
    fill(params.mu_head.weights);
    fill_vec(params.mu_head.bias);
    fill(params.logvar_head.weights);
    fill_vec(params.logvar_head.bias);
    fill(params.decoder);
}

VaeModel train(const ReturnPanel& panel, const VaeConfig& config) {
    const Eigen::Index n = panel.instruments();
    const Eigen::Index k = panel.rows();
    if (n < 1) throw HedgeError(ErrorCode::ZeroInstruments, "VAE needs at least one instrument");
    if (k < 1) throw HedgeError(ErrorCode::ZeroLength, "VAE needs at least one row");
    if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0.0) ||
        !(config.beta_hat >= 0.0) || config.kl_anneal_epochs < 0) {
        throw HedgeError(ErrorCode::InvalidArgument, "invalid VAE configuration");
    }

    VaeModel model;
    model.seed = config.seed;
    MatrixXd data(k, n + 1);
    data.leftCols(n) = panel.x;
    data.col(n) = panel.y;
    model.mean = VectorXd::Zero(n + 1);
    model.scale = VectorXd::Ones(n + 1);
    if (config.standardize) {
        model.mean = data.colwise().mean().transpose();
        const MatrixXd centered = data.rowwise() - model.mean.transpose();
        const double dof = static_cast<double>(std::max<Eigen::Index>(k - 1, 1));
        for (Eigen::Index j = 0; j <= n; ++j) {
            const double sd = std::sqrt(centered.col(j).squaredNorm() / dof);
            model.scale(j) = sd > 0.0 ? sd : 1.0;
        }
    }
    const MatrixXd targets =
        (data.rowwise() - model.mean.transpose()) * model.scale.cwiseInverse().asDiagonal();
    const MatrixXd inputs = targets.leftCols(n);

    model.params = init_parameters(n, config.hidden_layers, config.seed);
    Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    VectorXd velocity = VectorXd::Zero(model.params.parameter_count());

    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    const Eigen::Index batch_size = std::min<Eigen::Index>(config.batch_size, k);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double kl_weight =
            config.kl_anneal_epochs > 0
                ? config.beta_hat *
                      std::min(1.0, static_cast<double>(epoch + 1) / config.kl_anneal_epochs)
                : config.beta_hat;
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }

        EpochStats stats;
        stats.kl_weight = kl_weight;
        for (Eigen::Index start = 0; start < k; start += batch_size) {
            const Eigen::Index rows = std::min(batch_size, k - start);
            MatrixXd batch_in(rows, n);
            MatrixXd batch_out(rows, n + 1);
            MatrixXd noise(rows, n);
            for (Eigen::Index r = 0; r < rows; ++r) {
                const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
                batch_in.row(r) = inputs.row(src);
                batch_out.row(r) = targets.row(src);
                for (Eigen::Index c = 0; c < n; ++c) noise(r, c) = rng.normal();
            }
            VaeParameters grad;
            const LossBreakdown loss =
                loss_and_gradient(model.params, batch_in, batch_out, noise, kl_weight, &grad);
            if (!std::isfinite(loss.total)) {
                throw VaeDivergence(fmt::format("non-finite loss at epoch {}", epoch),
                                    model.history);
            }
            const double w = static_cast<double>(rows) / static_cast<double>(k);
            stats.reconstruction += w * loss.reconstruction;
            stats.kl += w * loss.kl;

            VectorXd g = flatten(grad);
            const double norm = g.norm();
            if (norm > config.clip_norm) g *= config.clip_norm / norm;
            velocity = config.momentum * velocity - config.learning_rate * g;
            assign(model.params, flatten(model.params) + velocity);
        }
        stats.total = stats.reconstruction + kl_weight * stats.kl;
        model.history.push_back(stats);
    }
    return model;
}

std::vector<VaeModel> train_restarts(const ReturnPanel& panel, const VaeConfig& config,
                                     int restarts) {
    if (restarts < 1) throw HedgeError(ErrorCode::InvalidArgument, "restarts must be >= 1");
    std::vector<VaeModel> models(static_cast<std::size_t>(restarts));
    std::vector<std::string> failures(static_cast<std::size_t>(restarts));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < restarts; ++r) {
        VaeConfig local = config;
        local.seed = config.seed + static_cast<std::uint64_t>(r);
        try {
            models[static_cast<std::size_t>(r)] = train(panel, local);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(r)] = e.what();
        }
    }
    for (const auto& f : failures) {
        if (!f.empty()) throw HedgeError(ErrorCode::NonFiniteLoss, f);
    }
    return models;
}

VectorXd extract_hedge_vae(const VaeModel& model, double max_condition) {
    const Eigen::Index n = model.instruments();
    FactorDecomposition view;
    view.gamma = model.params.decoder.leftCols(n);
    const VectorXd alpha = model.params.decoder.col(n);
    VectorXd beta = extract_hedge(view, alpha, max_condition);
    if (model.scale.size() == n + 1) {
        for (Eigen::Index j = 0; j < n; ++j) beta(j) *= model.scale(n) / model.scale(j);
    }
    return beta;
}

void write_model(std::ostream& out, const VaeModel& model) {
    const Eigen::Index n = model.instruments();
    out << "hedgekit-vae 1\n";
    out << "instruments " << n << "\n";
    out << "encoder_layers " << model.params.encoder.size() << "\n";
    out << "seed " << model.seed << "\n";
    auto write_tensor = [&](const std::string& name, const MatrixXd& m) {
        out << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                out << (c ? " " : "") << fmt::format("{:.17g}", m(r, c));
            }
            out << "\n";
        }
    };
    write_tensor("mean", model.mean.transpose());
    write_tensor("scale", model.scale.transpose());
    for_each_tensor(model.params, write_tensor);
}

VaeModel read_model(std::istream& in) {
    auto fail = [](const std::string& what) -> HedgeError {
        return HedgeError(ErrorCode::MalformedCsv, "model dump: " + what);
    };
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "hedgekit-vae" || version != 1) throw fail("bad header");
    Eigen::Index n = 0;
    std::size_t layers = 0;
    VaeModel model;
    if (!(in >> word >> n) || word != "instruments") throw fail("missing instruments");
    if (!(in >> word >> layers) || word != "encoder_layers") throw fail("missing encoder_layers");
    if (!(in >> word >> model.seed) || word != "seed") throw fail("missing seed");

    auto read_tensor = [&](const std::string& expected) {
        std::string tag, name;
        Eigen::Index rows = 0, cols = 0;
        if (!(in >> tag >> name >> rows >> cols) || tag != "tensor" || name != expected) {
            throw fail("expected tensor " + expected);
        }
        MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (!(in >> m(r, c))) throw fail("truncated tensor " + expected);
            }
        }
        return m;
    };
    model.mean = read_tensor("mean").transpose();
    model.scale = read_tensor("scale").transpose();
    for (std::size_t l = 0; l < layers; ++l) {
        DenseLayer layer;
        layer.weights = read_tensor(fmt::format("encoder.{}.weight", l));
        layer.bias = read_tensor(fmt::format("encoder.{}.bias", l)).transpose();
        model.params.encoder.push_back(std::move(layer));
    }
    model.params.mu_head.weights = read_tensor("mu.weight");
    model.params.mu_head.bias = read_tensor("mu.bias").transpose();
    model.params.logvar_head.weights = read_tensor("logvar.weight");
    model.params.logvar_head.bias = read_tensor("logvar.bias").transpose();
    model.params.decoder = read_tensor("decoder.weight");
    if (model.params.decoder.rows() != n || model.params.decoder.cols() != n + 1) {
        throw fail("decoder shape does not match instrument count");
    }
    return model;
}

}  // namespace hedgekit
