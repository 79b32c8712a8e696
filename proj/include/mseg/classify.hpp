#ifndef MSEG_CLASSIFY_HPP
#define MSEG_CLASSIFY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mseg/glcm.hpp"
#include "mseg/image.hpp"

namespace mseg {

/// BI-RADS assessment categories, ordered ACR1 (negative) to ACR5 (highly
/// suggestive of malignancy).
enum class AcrLabel : int { ACR1 = 0, ACR2, ACR3, ACR4, ACR5 };

constexpr int kAcrClassCount = 5;

inline std::string to_string(AcrLabel label) {
    return "ACR" + std::to_string(static_cast<int>(label) + 1);
}

inline AcrLabel acr_from_string(const std::string& s) {
    for (int i = 0; i < kAcrClassCount; ++i)
        if (s == "ACR" + std::to_string(i + 1)) return static_cast<AcrLabel>(i);
    throw format_error("unknown ACR label '" + s + "'");
}

struct LabelledSample {
    FeatureVector features;
    AcrLabel label = AcrLabel::ACR1;
};

/// Training data with min-max normalization fitted on itself.  Stored
/// vectors are already normalized to [0,1] per feature; queries must pass
/// through normalize() before any distance or forward computation.
class TrainingSet {
public:
    static TrainingSet fit(const std::vector<LabelledSample>& raw) {
        if (raw.empty()) throw degenerate_input("empty training set");
        TrainingSet ts;
        ts.feature_min_.fill(std::numeric_limits<double>::infinity());
        ts.feature_max_.fill(-std::numeric_limits<double>::infinity());
        for (const LabelledSample& s : raw) {
            const auto a = s.features.to_array();
            for (int i = 0; i < 6; ++i) {
                ts.feature_min_[i] = std::min(ts.feature_min_[i], a[i]);
                ts.feature_max_[i] = std::max(ts.feature_max_[i], a[i]);
            }
        }
        for (const LabelledSample& s : raw)
            ts.samples_.push_back({FeatureVector::from_array(ts.normalize(s.features)), s.label});
        return ts;
    }

    /// Scales by the fitted ranges and clamps into [0,1]; a collapsed range
    /// maps to 0.
    std::array<double, 6> normalize(const FeatureVector& f) const {
        const auto a = f.to_array();
        std::array<double, 6> out{};
        for (int i = 0; i < 6; ++i) {
            const double span = feature_max_[i] - feature_min_[i];
            out[i] = span > 0.0 ? std::clamp((a[i] - feature_min_[i]) / span, 0.0, 1.0) : 0.0;
        }
        return out;
    }

    const std::vector<LabelledSample>& samples() const { return samples_; }
    const std::array<double, 6>& feature_min() const { return feature_min_; }
    const std::array<double, 6>& feature_max() const { return feature_max_; }

    static TrainingSet from_parts(std::vector<LabelledSample> normalized,
                                  std::array<double, 6> lo, std::array<double, 6> hi) {
        if (normalized.empty()) throw degenerate_input("empty training set");
        TrainingSet ts;
        ts.samples_ = std::move(normalized);
        ts.feature_min_ = lo;
        ts.feature_max_ = hi;
        return ts;
    }

private:
    std::vector<LabelledSample> samples_;
    std::array<double, 6> feature_min_{};
    std::array<double, 6> feature_max_{};
};

/// Majority vote over the k nearest training vectors (Euclidean distance in
/// normalized space).  Distance ties keep training order; vote ties go to
/// the tied class seen nearest.
inline AcrLabel knn_classify(const TrainingSet& train, const FeatureVector& query, int k) {
    const auto& samples = train.samples();
    if (samples.empty()) throw degenerate_input("empty training set");
    if (k < 1 || static_cast<std::size_t>(k) > samples.size())
        throw config_error("k must lie in [1, training size]");

    const auto q = train.normalize(query);
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto s = samples[i].features.to_array();
        double d2 = 0.0;
        for (int j = 0; j < 6; ++j) d2 += (s[j] - q[j]) * (s[j] - q[j]);
        dist.emplace_back(d2, i);
    }
    std::sort(dist.begin(), dist.end());  // index breaks distance ties by training order

    std::array<int, kAcrClassCount> votes{};
    for (int i = 0; i < k; ++i) votes[static_cast<int>(samples[dist[i].second].label)]++;
    const int top = *std::max_element(votes.begin(), votes.end());
    for (int i = 0; i < k; ++i) {
        const AcrLabel label = samples[dist[i].second].label;
        if (votes[static_cast<int>(label)] == top) return label;
    }
    return samples[dist[0].second].label;  // unreachable
}

/// 6 -> hidden -> 5 perceptron: sigmoid hidden layer, softmax output.  The
/// fitted normalization ranges travel with the model.
struct MlpModel {
    int inputs = 6;
    int hidden = 12;
    int outputs = kAcrClassCount;
    std::vector<double> w1;  // hidden x inputs, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // outputs x hidden
    std::vector<double> b2;  // outputs
    std::array<double, 6> feature_min{};
    std::array<double, 6> feature_max{};

    std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

    double* parameter(std::size_t i) {
        if (i < w1.size()) return &w1[i];
        i -= w1.size();
        if (i < b1.size()) return &b1[i];
        i -= b1.size();
        if (i < w2.size()) return &w2[i];
        i -= w2.size();
        return &b2[i];
    }
    const double* parameter(std::size_t i) const {
        return const_cast<MlpModel*>(this)->parameter(i);
    }
};

struct MlpHyper {
    int hidden = 12;
    double learning_rate = 0.5;
    int epochs = 4000;
    std::uint64_t seed = 1;
};

namespace detail {

// uniform double in [0,1) from the raw engine, stable across platforms
inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    std::vector<double> e(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        e[i] = std::exp(z[i] - zmax);
        total += e[i];
    }
    for (double& v : e) v /= total;
    return e;
}

struct MlpForward {
    std::vector<double> hidden;  // sigmoid activations
    std::vector<double> probs;   // softmax outputs
};

inline MlpForward mlp_forward(const MlpModel& m, const std::array<double, 6>& x) {
    MlpForward f;
    f.hidden.resize(m.hidden);
    for (int j = 0; j < m.hidden; ++j) {
        double z = m.b1[j];
        for (int i = 0; i < m.inputs; ++i) z += m.w1[static_cast<std::size_t>(j) * m.inputs + i] * x[i];
        f.hidden[j] = 1.0 / (1.0 + std::exp(-z));
    }
    std::vector<double> z2(m.outputs);
    for (int o = 0; o < m.outputs; ++o) {
        double z = m.b2[o];
        for (int j = 0; j < m.hidden; ++j) z += m.w2[static_cast<std::size_t>(o) * m.hidden + j] * f.hidden[j];
        z2[o] = z;
    }
    f.probs = softmax(z2);
    return f;
}

}  // namespace detail

/// Mean cross-entropy of the model over normalized samples.
inline double mlp_loss(const MlpModel& model, const std::vector<LabelledSample>& samples) {
    double loss = 0.0;
    for (const LabelledSample& s : samples) {
        const auto f = detail::mlp_forward(model, s.features.to_array());
        const double p = std::max(f.probs[static_cast<int>(s.label)], 1e-300);
        loss -= std::log(p);
    }
    return loss / static_cast<double>(samples.size());
}

/// Analytic full-batch gradient of mlp_loss, in the same parameter order as
/// MlpModel::parameter.
inline std::vector<double> mlp_gradients(const MlpModel& m,
                                         const std::vector<LabelledSample>& samples) {
    std::vector<double> gw1(m.w1.size(), 0.0), gb1(m.b1.size(), 0.0);
    std::vector<double> gw2(m.w2.size(), 0.0), gb2(m.b2.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(samples.size());

    for (const LabelledSample& s : samples) {
        const auto x = s.features.to_array();
        const auto f = detail::mlp_forward(m, x);

        std::vector<double> dz2(m.outputs);  // softmax + cross-entropy
        for (int o = 0; o < m.outputs; ++o)
            dz2[o] = (f.probs[o] - (o == static_cast<int>(s.label) ? 1.0 : 0.0)) * inv_n;

        for (int o = 0; o < m.outputs; ++o) {
            gb2[o] += dz2[o];
            for (int j = 0; j < m.hidden; ++j)
                gw2[static_cast<std::size_t>(o) * m.hidden + j] += dz2[o] * f.hidden[j];
        }
        for (int j = 0; j < m.hidden; ++j) {
            double dh = 0.0;
            for (int o = 0; o < m.outputs; ++o)
                dh += dz2[o] * m.w2[static_cast<std::size_t>(o) * m.hidden + j];
            const double dz1 = dh * f.hidden[j] * (1.0 - f.hidden[j]);
            gb1[j] += dz1;
            for (int i = 0; i < m.inputs; ++i)
                gw1[static_cast<std::size_t>(j) * m.inputs + i] += dz1 * x[i];
        }
    }

    std::vector<double> grad;
    grad.reserve(gw1.size() + gb1.size() + gw2.size() + gb2.size());
    grad.insert(grad.end(), gw1.begin(), gw1.end());
    grad.insert(grad.end(), gb1.begin(), gb1.end());
    grad.insert(grad.end(), gw2.begin(), gw2.end());
    grad.insert(grad.end(), gb2.begin(), gb2.end());
    return grad;
}

/// Full-batch gradient descent with cross-entropy loss.  Weights start
/// uniform in [-0.5, 0.5] from the seed; a step that raises the loss by more
/// than 1e-6 is retried with a halved learning rate, so the recorded loss
/// sequence is non-increasing.
inline MlpModel mlp_train(const TrainingSet& train, const MlpHyper& hyper,
                          std::vector<double>* loss_history = nullptr) {
    if (hyper.learning_rate <= 0.0) throw config_error("learning rate must be positive");
    if (hyper.epochs < 1) throw config_error("epoch count must be positive");
    if (hyper.hidden < 1) throw config_error("hidden layer must be non-empty");

    MlpModel m;
    m.hidden = hyper.hidden;
    m.w1.resize(static_cast<std::size_t>(m.hidden) * m.inputs);
    m.b1.resize(m.hidden);
    m.w2.resize(static_cast<std::size_t>(m.outputs) * m.hidden);
    m.b2.resize(m.outputs);
    m.feature_min = train.feature_min();
    m.feature_max = train.feature_max();

    std::mt19937_64 rng(hyper.seed);
    for (std::size_t i = 0; i < m.parameter_count(); ++i)
        *m.parameter(i) = detail::unit_uniform(rng) - 0.5;

    const auto& samples = train.samples();
    double lr = hyper.learning_rate;
    double loss = mlp_loss(m, samples);
    if (loss_history) loss_history->push_back(loss);

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        const auto grad = mlp_gradients(m, samples);
        const MlpModel before = m;
        for (;;) {
            for (std::size_t i = 0; i < grad.size(); ++i)
                *m.parameter(i) = *before.parameter(i) - lr * grad[i];
            const double next_loss = mlp_loss(m, samples);
            if (!std::isfinite(next_loss))
                throw config_error("non-finite training loss at epoch " + std::to_string(epoch));
            if (next_loss <= loss + 1e-6 || lr < 1e-12) {
                loss = next_loss;
                break;
            }
            m = before;
            lr *= 0.5;
        }
        if (loss_history) loss_history->push_back(loss);
    }
    return m;
}

/// Forward pass and argmax; ties resolve to the lower ACR index.
inline AcrLabel mlp_classify(const MlpModel& model, const FeatureVector& query) {
    if (model.w1.size() != static_cast<std::size_t>(model.hidden) * model.inputs ||
        model.w2.size() != static_cast<std::size_t>(model.outputs) * model.hidden)
        throw config_error("model dimensions do not chain");
    std::array<double, 6> x{};
    {
        const auto a = query.to_array();
        for (int i = 0; i < 6; ++i) {
            const double span = model.feature_max[i] - model.feature_min[i];
            x[i] = span > 0.0 ? std::clamp((a[i] - model.feature_min[i]) / span, 0.0, 1.0) : 0.0;
        }
    }
    const auto f = detail::mlp_forward(model, x);
    int best = 0;
    for (int o = 1; o < model.outputs; ++o)
        if (f.probs[o] > f.probs[best]) best = o;
    return static_cast<AcrLabel>(best);
}

/// Accuracy summary over (predicted, truth) pairs.
struct EvalReport {
    double overall = 0.0;
    std::array<double, kAcrClassCount> per_class{};   // accuracy over each truth subset
    std::array<int, kAcrClassCount> truth_counts{};
    std::array<std::array<int, kAcrClassCount>, kAcrClassCount> confusion{};  // [truth][predicted]
};

inline EvalReport evaluate(const std::vector<std::pair<AcrLabel, AcrLabel>>& predictions) {
    if (predictions.empty()) throw degenerate_input("no predictions to evaluate");
    EvalReport r;
    int correct = 0;
    std::array<int, kAcrClassCount> class_correct{};
    for (const auto& [predicted, truth] : predictions) {
        const int t = static_cast<int>(truth);
        const int p = static_cast<int>(predicted);
        r.confusion[t][p]++;
        r.truth_counts[t]++;
        if (t == p) {
            ++correct;
            class_correct[t]++;
        }
    }
    r.overall = static_cast<double>(correct) / static_cast<double>(predictions.size());
    for (int c = 0; c < kAcrClassCount; ++c)
        r.per_class[c] = r.truth_counts[c] > 0
                             ? static_cast<double>(class_correct[c]) / r.truth_counts[c]
                             : 0.0;
    return r;
}

// --- model persistence -----------------------------------------------------

inline void save_mlp(const MlpModel& m, std::ostream& out) {
    out << "mammoseg-model 1\n";
    out << "mlp\n";
    out << "layers " << m.inputs << " " << m.hidden << " " << m.outputs << "\n";
    out << std::setprecision(17);
    auto write_block = [&out](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out << v[i] << (i + 1 == v.size() ? '\n' : ' ');
    };
    write_block(m.w1);
    write_block(m.b1);
    write_block(m.w2);
    write_block(m.b2);
    out << "normalization\n";
    for (int i = 0; i < 6; ++i) out << m.feature_min[i] << (i == 5 ? '\n' : ' ');
    for (int i = 0; i < 6; ++i) out << m.feature_max[i] << (i == 5 ? '\n' : ' ');
}

inline void save_mlp(const MlpModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot write '" + path + "'");
    save_mlp(m, out);
}

inline MlpModel load_mlp(std::istream& in) {
    std::string word, version, kind;
    in >> word >> version >> kind;
    if (word != "mammoseg-model" || version != "1")
        throw format_error("not a mammoseg model file");
    if (kind != "mlp") throw format_error("expected an mlp model, found '" + kind + "'");
    in >> word;
    if (word != "layers") throw format_error("missing layer sizes line");
    MlpModel m;
    in >> m.inputs >> m.hidden >> m.outputs;
    if (!in || m.inputs < 1 || m.hidden < 1 || m.outputs < 1)
        throw format_error("bad layer sizes");
    m.w1.resize(static_cast<std::size_t>(m.hidden) * m.inputs);
    m.b1.resize(m.hidden);
    m.w2.resize(static_cast<std::size_t>(m.outputs) * m.hidden);
    m.b2.resize(m.outputs);
    for (auto* block : {&m.w1, &m.b1, &m.w2, &m.b2})
        for (double& v : *block)
            if (!(in >> v)) throw format_error("truncated weight block");
    in >> word;
    if (word != "normalization") throw format_error("missing normalization ranges");
    for (double& v : m.feature_min)
        if (!(in >> v)) throw format_error("truncated normalization ranges");
    for (double& v : m.feature_max)
        if (!(in >> v)) throw format_error("truncated normalization ranges");
    return m;
}

inline MlpModel load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    return load_mlp(in);
}

}  // namespace mseg

#endif  // MSEG_CLASSIFY_HPP
