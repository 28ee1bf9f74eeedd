#include "simba/problems.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace simba {

namespace {

Eigen::MatrixXd random_orthogonal(Eigen::Index n, Rng& rng) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, n, rng));
    Eigen::MatrixXd q = qr.householderQ();
    // Fix the sign ambiguity so the basis is a deterministic function of rng.
    const Eigen::VectorXd diag = qr.matrixQR().diagonal();
    for (Eigen::Index j = 0; j < n; ++j)
        if (diag[j] < 0.0) q.col(j) = -q.col(j);
    return q;
}

std::vector<Eigen::Index> all_samples(Eigen::Index m) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    return idx;
}

double sigmoid_standard(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double nlls_sigmoid(double w) {
    // g(w) = 1 / (1 + exp(w)); saturates instead of overflowing.
    if (w <= 0.0) return 1.0 / (1.0 + std::exp(w));
    const double e = std::exp(-w);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// QuadraticProblem

QuadraticProblem::QuadraticProblem(const Eigen::VectorXd& spectrum, const Eigen::VectorXd& x_star,
                                   std::uint64_t seed)
    : x_star_(x_star) {
    if (spectrum.size() != x_star.size())
        throw std::invalid_argument("QuadraticProblem: spectrum/x* size mismatch");
    if (spectrum.size() < 1) throw std::invalid_argument("QuadraticProblem: empty spectrum");
    mu_ = spectrum.minCoeff();
    l_ = spectrum.maxCoeff();
    if (!(mu_ > 0.0 && mu_ < l_))
        throw std::invalid_argument("QuadraticProblem: spectrum must satisfy 0 < mu < L");

    Rng rng(seed);
    const Eigen::MatrixXd basis = random_orthogonal(spectrum.size(), rng);
    a_ = basis * spectrum.asDiagonal() * basis.transpose();
    a_ = 0.5 * (a_ + a_.transpose());
}

std::vector<ParamBlock> QuadraticProblem::initial_blocks(InitKind kind, std::uint64_t seed) const {
    const Eigen::Index n = x_star_.size();
    Eigen::VectorXd x0;
    switch (kind) {
        case InitKind::Normal: {
            Rng rng(seed);
            x0 = gaussian_matrix(n, 1, rng);
            break;
        }
        case InitKind::Zero:
        case InitKind::Default:
            x0 = Eigen::VectorXd::Zero(n);
            break;
    }
    return {ParamBlock{"x", x0}};
}

double QuadraticProblem::loss(const std::vector<ParamBlock>& blocks) const {
    const Eigen::VectorXd diff = blocks.at(0).values.col(0) - x_star_;
    return 0.5 * diff.dot(a_ * diff);
}

double QuadraticProblem::batch_gradient(const std::vector<ParamBlock>& blocks,
                                        std::span<const Eigen::Index>,
                                        std::vector<Eigen::MatrixXd>& grads) const {
    grads.resize(1);
    grads[0] = a_ * (blocks.at(0).values.col(0) - x_star_);
    return loss(blocks);
}

std::optional<CurvatureInfo> QuadraticProblem::curvature() const {
    return CurvatureInfo{mu_, l_, 0.0};
}

// ---------------------------------------------------------------------------
// NllsProblem

NllsProblem::NllsProblem(Dataset data) : data_(std::move(data)) {
    if (data_.sample_count() < 1) throw std::invalid_argument("NllsProblem: empty dataset");
    if (data_.labels.size() != data_.sample_count())
        throw std::invalid_argument("NllsProblem: label/feature count mismatch");
    if (!data_.features.allFinite() || !data_.labels.allFinite())
        throw std::invalid_argument("NllsProblem: non-finite data");
}

std::vector<ParamBlock> NllsProblem::initial_blocks(InitKind kind, std::uint64_t seed) const {
    const Eigen::Index n = data_.feature_count();
    Eigen::VectorXd x0;
    switch (kind) {
        case InitKind::Normal: {
            Rng rng(seed);
            x0 = gaussian_matrix(n, 1, rng);
            break;
        }
        case InitKind::Zero:
        case InitKind::Default:
            x0 = Eigen::VectorXd::Zero(n);
            break;
    }
    return {ParamBlock{"x", x0}};
}

double NllsProblem::loss(const std::vector<ParamBlock>& blocks) const {
    const Eigen::VectorXd& x = blocks.at(0).values.col(0);
    if (x.size() != data_.feature_count())
        throw std::invalid_argument("NllsProblem: parameter dimension mismatch");
    const Eigen::VectorXd z = data_.features * x;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double r = data_.labels[i] - nlls_sigmoid(z[i]);
        total += r * r;
    }
    return total / static_cast<double>(data_.sample_count());
}

double NllsProblem::batch_gradient(const std::vector<ParamBlock>& blocks,
                                   std::span<const Eigen::Index> batch,
                                   std::vector<Eigen::MatrixXd>& grads) const {
    const Eigen::VectorXd& x = blocks.at(0).values.col(0);
    if (x.size() != data_.feature_count())
        throw std::invalid_argument("NllsProblem: parameter dimension mismatch");

    std::vector<Eigen::Index> full;
    if (batch.empty()) {
        full = all_samples(data_.sample_count());
        batch = full;
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
    double total = 0.0;
    for (const Eigen::Index i : batch) {
        const double z = data_.features.row(i).dot(x);
        const double g = nlls_sigmoid(z);
        const double r = data_.labels[i] - g;
        total += r * r;
        // d/dz (b - g(z))^2 = 2 (b - g) g (1 - g), using g' = -g (1 - g).
        grad += (2.0 * r * g * (1.0 - g)) * data_.features.row(i).transpose();
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    grads.resize(1);
    grads[0] = grad * inv;
    return total * inv;
}

// ---------------------------------------------------------------------------
// AutoencoderProblem

void MlpSpec::validate() const {
    if (widths.size() < 2) throw std::invalid_argument("MlpSpec: need at least one layer");
    if (widths.front() != widths.back())
        throw std::invalid_argument("MlpSpec: output width must equal input width");
    for (std::size_t i = 0, j = widths.size() - 1; i < j; ++i, --j)
        if (widths[i] != widths[j])
            throw std::invalid_argument("MlpSpec: decoder widths must mirror the encoder");
    for (const Eigen::Index w : widths)
        if (w < 1) throw std::invalid_argument("MlpSpec: widths must be positive");
    if (!(init_scale > 0.0)) throw std::invalid_argument("MlpSpec: init_scale must be positive");
}

AutoencoderProblem::AutoencoderProblem(MlpSpec spec, Dataset data)
    : spec_(std::move(spec)), data_(std::move(data)) {
    spec_.validate();
    if (data_.feature_count() != spec_.widths.front())
        throw std::invalid_argument("AutoencoderProblem: data width must match input width");
    if (data_.sample_count() < 1) throw std::invalid_argument("AutoencoderProblem: empty dataset");
}

std::vector<ParamBlock> AutoencoderProblem::initial_blocks(InitKind kind,
                                                           std::uint64_t seed) const {
    Rng rng(fnv1a64("mlp_init", seed ^ spec_.seed));
    std::vector<ParamBlock> blocks;
    const Eigen::Index layers = layer_count();
    blocks.reserve(static_cast<std::size_t>(2 * layers));
    for (Eigen::Index l = 0; l < layers; ++l) {
        const Eigen::Index fan_in = spec_.widths[static_cast<std::size_t>(l)];
        const Eigen::Index fan_out = spec_.widths[static_cast<std::size_t>(l + 1)];
        Eigen::MatrixXd w(fan_out, fan_in);
        switch (kind) {
            case InitKind::Zero:
                w.setZero();
                break;
            case InitKind::Normal:
                w = gaussian_matrix(fan_out, fan_in, rng);
                break;
            case InitKind::Default: {
                const double bound = spec_.init_scale / std::sqrt(static_cast<double>(fan_in));
                std::uniform_real_distribution<double> uniform(-bound, bound);
                for (Eigen::Index j = 0; j < fan_in; ++j)
                    for (Eigen::Index i = 0; i < fan_out; ++i) w(i, j) = uniform(rng);
                break;
            }
        }
        blocks.push_back(ParamBlock{"w" + std::to_string(l + 1), std::move(w)});
        blocks.push_back(ParamBlock{"b" + std::to_string(l + 1),
                                    Eigen::MatrixXd::Zero(fan_out, 1)});
    }
    return blocks;
}

double AutoencoderProblem::forward_backward(const std::vector<ParamBlock>& blocks,
                                            std::span<const Eigen::Index> batch,
                                            std::vector<Eigen::MatrixXd>* grads) const {
    const Eigen::Index layers = layer_count();
    if (static_cast<Eigen::Index>(blocks.size()) != 2 * layers)
        throw std::invalid_argument("AutoencoderProblem: expected one weight and bias per layer");

    std::vector<Eigen::Index> full;
    if (batch.empty()) {
        full = all_samples(data_.sample_count());
        batch = full;
    }
    const auto batch_size = static_cast<Eigen::Index>(batch.size());

    Eigen::MatrixXd input(spec_.widths.front(), batch_size);  // columns are samples
    for (Eigen::Index c = 0; c < batch_size; ++c)
        input.col(c) = data_.features.row(batch[static_cast<std::size_t>(c)]).transpose();

    // Forward pass, keeping activations for the backward sweep.
    std::vector<Eigen::MatrixXd> activations;
    activations.reserve(static_cast<std::size_t>(layers) + 1);
    activations.push_back(input);
    for (Eigen::Index l = 0; l < layers; ++l) {
        const Eigen::MatrixXd& w = blocks[static_cast<std::size_t>(2 * l)].values;
        const Eigen::VectorXd b = blocks[static_cast<std::size_t>(2 * l + 1)].values.col(0);
        Eigen::MatrixXd z = (w * activations.back()).colwise() + b;
        if (spec_.activation == Activation::Sigmoid) {
            for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = sigmoid_standard(z(j));
        } else {
            z = z.cwiseMax(0.0);
        }
        activations.push_back(std::move(z));
    }

    // Batch mean of the per-sample squared reconstruction error.
    const Eigen::MatrixXd residual = activations.back() - input;
    const double denom = static_cast<double>(batch_size);
    const double loss_value = residual.squaredNorm() / denom;
    if (grads == nullptr) return loss_value;

    grads->assign(static_cast<std::size_t>(2 * layers), Eigen::MatrixXd());

    // Backward sweep. delta holds dLoss/dz for the current layer.
    Eigen::MatrixXd delta = (2.0 / denom) * residual;
    for (Eigen::Index l = layers - 1; l >= 0; --l) {
        const Eigen::MatrixXd& out = activations[static_cast<std::size_t>(l + 1)];
        if (spec_.activation == Activation::Sigmoid) {
            delta.array() *= out.array() * (1.0 - out.array());
        } else {
            delta.array() *= (out.array() > 0.0).cast<double>();
        }
        (*grads)[static_cast<std::size_t>(2 * l)] =
            delta * activations[static_cast<std::size_t>(l)].transpose();
        (*grads)[static_cast<std::size_t>(2 * l + 1)] = delta.rowwise().sum();
        if (l > 0)
            delta = blocks[static_cast<std::size_t>(2 * l)].values.transpose() * delta;
    }
    return loss_value;
}

double AutoencoderProblem::loss(const std::vector<ParamBlock>& blocks) const {
    return forward_backward(blocks, {}, nullptr);
}

double AutoencoderProblem::batch_gradient(const std::vector<ParamBlock>& blocks,
                                          std::span<const Eigen::Index> batch,
                                          std::vector<Eigen::MatrixXd>& grads) const {
    return forward_backward(blocks, batch, &grads);
}

std::vector<double> AutoencoderProblem::layer_gradient_norms(
    const std::vector<ParamBlock>& blocks, std::span<const Eigen::Index> batch) const {
    std::vector<Eigen::MatrixXd> grads;
    forward_backward(blocks, batch, &grads);
    std::vector<double> norms;
    norms.reserve(static_cast<std::size_t>(layer_count()));
    for (Eigen::Index l = 0; l < layer_count(); ++l)
        norms.push_back(grads[static_cast<std::size_t>(2 * l)].norm());
    return norms;
}

// ---------------------------------------------------------------------------
// LIBSVM format

Dataset parse_libsvm(const std::string& path, Eigen::Index feature_count) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_libsvm: cannot open " + path);

    struct Row {
        double label;
        std::vector<std::pair<Eigen::Index, double>> entries;
    };
    std::vector<Row> rows;
    Eigen::Index max_index = 0;
    bool saw_negative_one = false;
    bool binary = true;

    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Strip comments and skip blank lines.
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) continue;

        Row row;
        std::size_t consumed = 0;
        try {
            row.label = std::stod(token, &consumed);
        } catch (const std::exception&) {
            consumed = 0;
        }
        if (consumed != token.size())
            throw std::runtime_error("parse_libsvm: line " + std::to_string(line_no) +
                                     ": bad label '" + token + "'");

        while (ls >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == token.size())
                throw std::runtime_error("parse_libsvm: line " + std::to_string(line_no) +
                                         ": bad entry '" + token + "'");
            Eigen::Index idx = 0;
            double value = 0.0;
            try {
                std::size_t used = 0;
                idx = static_cast<Eigen::Index>(std::stoll(token.substr(0, colon), &used));
                if (used != colon) throw std::invalid_argument("trailing");
                value = std::stod(token.substr(colon + 1), &used);
                if (used != token.size() - colon - 1) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw std::runtime_error("parse_libsvm: line " + std::to_string(line_no) +
                                         ": bad entry '" + token + "'");
            }
            if (idx < 1)
                throw std::runtime_error("parse_libsvm: line " + std::to_string(line_no) +
                                         ": index must be >= 1");
            max_index = std::max(max_index, idx);
            row.entries.emplace_back(idx - 1, value);
        }

        if (row.label == -1.0) saw_negative_one = true;
        if (row.label != -1.0 && row.label != 0.0 && row.label != 1.0) binary = false;
        rows.push_back(std::move(row));
    }

    if (rows.empty()) throw std::invalid_argument("parse_libsvm: empty file " + path);

    const Eigen::Index n = feature_count > 0 ? feature_count : max_index;
    if (feature_count > 0 && max_index > feature_count)
        throw std::runtime_error("parse_libsvm: feature index exceeds declared count");

    Dataset data;
    data.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
    data.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double label = rows[i].label;
        if (binary && saw_negative_one) label = label < 0.0 ? 0.0 : 1.0;
        data.labels[static_cast<Eigen::Index>(i)] = label;
        for (const auto& [idx, value] : rows[i].entries)
            data.features(static_cast<Eigen::Index>(i), idx) = value;
    }
    return data;
}

void write_libsvm(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_libsvm: cannot open " + path);
    char buf[64];
    for (Eigen::Index i = 0; i < data.sample_count(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", data.labels[i]);
        out << buf;
        for (Eigen::Index j = 0; j < data.feature_count(); ++j) {
            const double v = data.features(i, j);
            if (v == 0.0) continue;
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ' ' << (j + 1) << ':' << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_libsvm: write failed for " + path);
}

// ---------------------------------------------------------------------------
// Synthetic data

Dataset synthetic_nlls(Eigen::Index m, Eigen::Index n, double sparsity, std::uint64_t seed,
                       Eigen::VectorXd* x_true_out) {
    if (m < 1 || n < 1) throw std::invalid_argument("synthetic_nlls: m, n must be >= 1");
    if (!(sparsity > 0.0 && sparsity <= 1.0))
        throw std::invalid_argument("synthetic_nlls: sparsity must lie in (0, 1]");

    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::gamma_distribution<double> chi2_3(1.5, 2.0);

    Dataset data;
    data.features = Eigen::MatrixXd::Zero(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (unit(rng) >= sparsity) continue;
            // Student-t with 3 degrees of freedom: heavy tails, finite variance.
            data.features(i, j) = normal(rng) / std::sqrt(chi2_3(rng) / 3.0);
        }
    }

    Eigen::VectorXd x_true(n);
    for (Eigen::Index j = 0; j < n; ++j) x_true[j] = normal(rng) / std::sqrt(sparsity * n);

    data.labels.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double g = nlls_sigmoid(data.features.row(i).dot(x_true));
        data.labels[i] = g > 0.5 ? 1.0 : 0.0;
    }
    if (x_true_out != nullptr) *x_true_out = x_true;
    return data;
}

Dataset synthetic_signals(Eigen::Index samples, Eigen::Index width, std::uint64_t seed) {
    if (samples < 1 || width < 1)
        throw std::invalid_argument("synthetic_signals: samples, width must be >= 1");

    Rng rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::uniform_int_distribution<int> freq(1, 4);
    std::normal_distribution<double> normal(0.0, 1.0);

    Dataset data;
    data.features.resize(samples, width);
    data.labels = Eigen::VectorXd::Zero(samples);
    for (Eigen::Index i = 0; i < samples; ++i) {
        double a1 = normal(rng), a2 = normal(rng), a3 = normal(rng);
        // normalize in l1 so the mixture never leaves [-1, 1]
        const double norm = std::abs(a1) + std::abs(a2) + std::abs(a3) + 1e-12;
        a1 /= norm, a2 /= norm, a3 /= norm;
        const int f1 = freq(rng), f2 = freq(rng), f3 = freq(rng);
        const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
        for (Eigen::Index t = 0; t < width; ++t) {
            const double u = 2.0 * M_PI * static_cast<double>(t) / static_cast<double>(width);
            const double s = a1 * std::sin(f1 * u + p1) + a2 * std::sin(f2 * u + p2) +
                             a3 * std::sin(f3 * u + p3);
            data.features(i, t) = 0.5 + 0.4 * s;  // stays within (0.1, 0.9)
        }
    }
    return data;
}

}  // namespace simba
