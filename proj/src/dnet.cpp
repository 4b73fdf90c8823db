#include "earlyrisk/dnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace earlyrisk::dnet {
namespace {

constexpr const char* kCheckpointMagic = "earlyrisk-dnet-checkpoint";
constexpr int kCheckpointVersion = 1;

double relu(double v) { return v > 0.0 ? v : 0.0; }

/// z(b, l, f) = bias(f) + sum_k sum_c in(b, l + k - pad_left, c) W(k, c, f), out of
/// range positions reading as zero.
Tensor3 conv_forward(const Tensor3& in, const ParamTensor& kernel, const ParamTensor& bias, std::size_t pad_left,
                     std::size_t out_len) {
    const std::size_t k_size = kernel.shape[0];
    const std::size_t cin = kernel.shape[1];
    const std::size_t cout = kernel.shape[2];
    Tensor3 out(in.batch, out_len, cout);
    for (std::size_t b = 0; b < in.batch; ++b) {
        for (std::size_t l = 0; l < out_len; ++l) {
            double* z = &out(b, l, 0);
            std::copy(bias.values.begin(), bias.values.end(), z);
            for (std::size_t k = 0; k < k_size; ++k) {
                const auto pos = static_cast<std::ptrdiff_t>(l + k) - static_cast<std::ptrdiff_t>(pad_left);
                if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(in.length)) continue;
                for (std::size_t c = 0; c < cin; ++c) {
                    const double xv = in(b, static_cast<std::size_t>(pos), c);
                    const double* w = &kernel.values[(k * cin + c) * cout];
                    for (std::size_t f = 0; f < cout; ++f) z[f] += xv * w[f];
                }
            }
        }
    }
    return out;
}

void conv_backward(const Tensor3& in, const ParamTensor& kernel, const Tensor3& dz, std::size_t pad_left,
                   ParamTensor& dkernel, ParamTensor& dbias, Tensor3* din) {
    const std::size_t k_size = kernel.shape[0];
    const std::size_t cin = kernel.shape[1];
    const std::size_t cout = kernel.shape[2];
    for (std::size_t b = 0; b < dz.batch; ++b) {
        for (std::size_t l = 0; l < dz.length; ++l) {
            const double* g = &dz(b, l, 0);
            for (std::size_t f = 0; f < cout; ++f) dbias.values[f] += g[f];
            for (std::size_t k = 0; k < k_size; ++k) {
                const auto pos = static_cast<std::ptrdiff_t>(l + k) - static_cast<std::ptrdiff_t>(pad_left);
                if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(in.length)) continue;
                const auto p = static_cast<std::size_t>(pos);
                for (std::size_t c = 0; c < cin; ++c) {
                    const double xv = in(b, p, c);
                    const double* w = &kernel.values[(k * cin + c) * cout];
                    double* dw = &dkernel.values[(k * cin + c) * cout];
                    double acc = 0.0;
                    for (std::size_t f = 0; f < cout; ++f) {
                        dw[f] += xv * g[f];
                        acc += w[f] * g[f];
                    }
                    if (din != nullptr) (*din)(b, p, c) += acc;
                }
            }
        }
    }
}

Tensor3 relu_of(const Tensor3& in) {
    Tensor3 out = in;
    for (auto& v : out.values) v = relu(v);
    return out;
}

/// Batch normalization per channel over (batch, length).
NormCache norm_forward(const Tensor3& in, const BatchNormParams& p, NormMode mode, double eps) {
    const std::size_t c_count = in.channels;
    const std::size_t rows = in.batch * in.length;
    NormCache cache;
    cache.mean.assign(c_count, 0.0);
    cache.variance.assign(c_count, 0.0);
    cache.inv_std.assign(c_count, 0.0);
    if (mode == NormMode::batch_stats) {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < c_count; ++c) cache.mean[c] += in.values[r * c_count + c];
        }
        for (auto& m : cache.mean) m /= static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < c_count; ++c) {
                const double d = in.values[r * c_count + c] - cache.mean[c];
                cache.variance[c] += d * d;
            }
        }
        for (auto& v : cache.variance) v /= static_cast<double>(rows);
    } else {
        cache.mean = p.running_mean.values;
        cache.variance = p.running_var.values;
    }
    for (std::size_t c = 0; c < c_count; ++c) cache.inv_std[c] = 1.0 / std::sqrt(cache.variance[c] + eps);
    cache.normalized = Tensor3(in.batch, in.length, c_count);
    cache.output = Tensor3(in.batch, in.length, c_count);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < c_count; ++c) {
            const double xhat = (in.values[r * c_count + c] - cache.mean[c]) * cache.inv_std[c];
            cache.normalized.values[r * c_count + c] = xhat;
            cache.output.values[r * c_count + c] = p.gamma.values[c] * xhat + p.beta.values[c];
        }
    }
    return cache;
}

Tensor3 norm_backward(const NormCache& cache, const BatchNormParams& p, const Tensor3& dy, NormMode mode,
                      BatchNormParams& grad) {
    const std::size_t c_count = dy.channels;
    const std::size_t rows = dy.batch * dy.length;
    const double n = static_cast<double>(rows);
    std::vector<double> sum_dxhat(c_count, 0.0);
    std::vector<double> sum_dxhat_xhat(c_count, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < c_count; ++c) {
            const double g = dy.values[r * c_count + c];
            const double xhat = cache.normalized.values[r * c_count + c];
            grad.gamma.values[c] += g * xhat;
            grad.beta.values[c] += g;
            const double dxhat = g * p.gamma.values[c];
            sum_dxhat[c] += dxhat;
            sum_dxhat_xhat[c] += dxhat * xhat;
        }
    }
    Tensor3 dx(dy.batch, dy.length, c_count);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < c_count; ++c) {
            const double dxhat = dy.values[r * c_count + c] * p.gamma.values[c];
            if (mode == NormMode::running_stats) {
                dx.values[r * c_count + c] = dxhat * cache.inv_std[c];
            } else {
                const double xhat = cache.normalized.values[r * c_count + c];
                dx.values[r * c_count + c] =
                    cache.inv_std[c] / n * (n * dxhat - sum_dxhat[c] - xhat * sum_dxhat_xhat[c]);
            }
        }
    }
    return dx;
}

/// Inverted dropout: kept units are scaled by 1 / (1 - rate).
Tensor3 dropout_forward(const Tensor3& in, double rate, bool active, Rng& rng, std::vector<double>& mask) {
    if (!active || rate == 0.0) {
        mask.clear();
        return in;
    }
    mask.resize(in.values.size());
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor3 out = in;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        out.values[i] *= mask[i];
    }
    return out;
}

Tensor3 dropout_backward(const Tensor3& dy, const std::vector<double>& mask) {
    if (mask.empty()) return dy;
    Tensor3 dx = dy;
    for (std::size_t i = 0; i < mask.size(); ++i) dx.values[i] *= mask[i];
    return dx;
}

void init_he_normal(ParamTensor& t, std::size_t fan_in, Rng& rng) {
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.values) v = sd * rng.normal();
}

void init_xavier_uniform(ParamTensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.values) v = rng.uniform(-limit, limit);
}

BatchNormParams allocate_norm(std::size_t channels) {
    return {ParamTensor({channels}, 1.0), ParamTensor({channels}, 0.0), ParamTensor({channels}, 0.0),
            ParamTensor({channels}, 1.0)};
}

DNetParams allocate(const DNetConfig& c) {
    DNetParams p;
    const std::size_t f = c.conv_filters;
    const std::size_t h = c.lstm_units;
    p.conv_kernel = ParamTensor({c.kernel, 1, f});
    p.conv_bias = ParamTensor({f});
    p.norm = allocate_norm(f);
    p.residual.resize(c.residual_units);
    for (auto& u : p.residual) {
        u.kernel = ParamTensor({c.kernel, f, f});
        u.bias = ParamTensor({f});
        u.norm = allocate_norm(f);
    }
    p.lstm_kernel = ParamTensor({f, 4 * h});
    p.lstm_recurrent = ParamTensor({h, 4 * h});
    p.lstm_bias = ParamTensor({4 * h});
    p.dense_kernel = ParamTensor({h, c.dense_units});
    p.dense_bias = ParamTensor({c.dense_units});
    p.output_kernel = ParamTensor({c.dense_units, 1});
    p.output_bias = ParamTensor({1});
    return p;
}

void require_batch(const DNetConfig& config, const Tensor3& batch) {
    if (batch.batch == 0) {
        throw Error("dnet: empty batch");
    }
    if (batch.length != config.input_length || batch.channels != 1) {
        throw Error("dnet: batch shape (" + std::to_string(batch.batch) + ", " + std::to_string(batch.length) + ", " +
                    std::to_string(batch.channels) + ") does not match the expected (*, " +
                    std::to_string(config.input_length) + ", 1)");
    }
}

/// ReLU activity and max-pool choices, i.e. the points where the network is not smooth.
std::vector<std::size_t> activation_pattern(const ForwardCache& cache) {
    std::vector<std::size_t> out = cache.pool_argmax;
    auto add = [&](const std::vector<double>& v) {
        for (double x : v) out.push_back(x > 0.0 ? 1 : 0);
    };
    add(cache.conv_pre.values);
    for (const auto& r : cache.residual) add(r.pre_activation.values);
    for (const auto& c : cache.cell) add(c);
    for (const auto& g : cache.gates) add(g);
    add(cache.dense_pre);
    return out;
}

}  // namespace

Tensor3 Tensor3::from_rows(const Matrix& x) {
    Tensor3 t(x.rows(), x.cols(), 1);
    std::copy(x.values().begin(), x.values().end(), t.values.begin());
    return t;
}

Tensor3 Tensor3::from_rows(const Matrix& x, std::span<const std::size_t> rows) {
    Tensor3 t(rows.size(), x.cols(), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = x.row(rows[i]);
        std::copy(r.begin(), r.end(), t.values.begin() + static_cast<std::ptrdiff_t>(i * x.cols()));
    }
    return t;
}

void DNetConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error("dnet config: " + msg); };
    if (input_length == 0) fail("input_length must be positive");
    if (kernel == 0 || kernel > input_length) {
        fail("kernel " + std::to_string(kernel) + " must lie in [1, input_length = " + std::to_string(input_length) +
             "]");
    }
    if (pool == 0 || pool > conv_length()) {
        fail("pool " + std::to_string(pool) + " must lie in [1, post-convolution length " +
             std::to_string(conv_length()) + "]");
    }
    if (conv_filters == 0 || lstm_units == 0 || dense_units == 0) fail("layer widths must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
    if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) fail("bn_momentum must lie in [0, 1)");
    if (!(bn_epsilon > 0.0)) fail("bn_epsilon must be positive");
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) fail("lr0 must be positive");
    if (!(decay > 0.0 && decay <= 1.0)) fail("decay must lie in (0, 1]");
    if (batch_size == 0) fail("batch_size must be positive");
}

double lr_at(const DNetConfig& config, std::size_t epoch) {
    const double raw = config.lr0 * std::pow(config.decay, static_cast<double>(epoch));
    // Rounded to 15 significant digits: absorbs last-bit differences between pow
    // implementations and keeps decimal schedules exact (0.01 * 0.9^2 == 0.0081).
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, raw, std::chars_format::scientific, 14).ptr;
    double rounded = raw;
    std::from_chars(buf, end, rounded);
    return rounded;
}

ParamTensor::ParamTensor(std::vector<std::size_t> dims, double fill) : shape(std::move(dims)) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    values.assign(n, fill);
}

std::vector<DNetParams::Group> DNetParams::groups() {
    std::vector<Group> g;
    auto add_norm = [&](const std::string& prefix, BatchNormParams& n) {
        g.push_back({prefix + ".gamma", &n.gamma, true});
        g.push_back({prefix + ".beta", &n.beta, true});
        g.push_back({prefix + ".running_mean", &n.running_mean, false});
        g.push_back({prefix + ".running_var", &n.running_var, false});
    };
    g.push_back({"conv.kernel", &conv_kernel, true});
    g.push_back({"conv.bias", &conv_bias, true});
    add_norm("norm", norm);
    for (std::size_t i = 0; i < residual.size(); ++i) {
        const std::string prefix = "residual" + std::to_string(i);
        g.push_back({prefix + ".kernel", &residual[i].kernel, true});
        g.push_back({prefix + ".bias", &residual[i].bias, true});
        add_norm(prefix + ".norm", residual[i].norm);
    }
    g.push_back({"lstm.kernel", &lstm_kernel, true});
    g.push_back({"lstm.recurrent", &lstm_recurrent, true});
    g.push_back({"lstm.bias", &lstm_bias, true});
    g.push_back({"dense.kernel", &dense_kernel, true});
    g.push_back({"dense.bias", &dense_bias, true});
    g.push_back({"output.kernel", &output_kernel, true});
    g.push_back({"output.bias", &output_bias, true});
    return g;
}

std::vector<const ParamTensor*> DNetParams::tensors() const {
    std::vector<const ParamTensor*> out;
    for (const auto& g : const_cast<DNetParams*>(this)->groups()) out.push_back(g.tensor);
    return out;
}

DNetParams DNetParams::zeros_like() const {
    DNetParams z = *this;
    for (auto& g : z.groups()) std::fill(g.tensor->values.begin(), g.tensor->values.end(), 0.0);
    return z;
}

DNetParams build(const DNetConfig& config) {
    config.validate();
    DNetParams p = allocate(config);
    Rng rng(derive_seed(config.seed, 0));
    const std::size_t f = config.conv_filters;
    const std::size_t h = config.lstm_units;
    init_he_normal(p.conv_kernel, config.kernel, rng);
    for (auto& u : p.residual) init_he_normal(u.kernel, config.kernel * f, rng);
    init_xavier_uniform(p.lstm_kernel, f, 4 * h, rng);
    init_xavier_uniform(p.lstm_recurrent, h, 4 * h, rng);
    for (std::size_t j = h; j < 2 * h; ++j) p.lstm_bias.values[j] = 1.0;
    init_he_normal(p.dense_kernel, h, rng);
    init_he_normal(p.output_kernel, config.dense_units, rng);
    return p;
}

ForwardCache forward(const DNetParams& params, const DNetConfig& config, const Tensor3& batch,
                     ForwardControl control, Rng& rng) {
    require_batch(config, batch);
    const std::size_t bsz = batch.batch;
    const std::size_t f = config.conv_filters;
    const std::size_t h = config.lstm_units;
    const std::size_t d = config.dense_units;
    const double rate = config.dropout_rate;

    ForwardCache c;
    c.control = control;
    c.input = batch;
    c.conv_pre = conv_forward(batch, params.conv_kernel, params.conv_bias, 0, config.conv_length());
    c.conv_out = relu_of(c.conv_pre);

    const std::size_t pooled_len = config.pooled_length();
    c.pooled = Tensor3(bsz, pooled_len, f);
    c.pool_argmax.assign(bsz * pooled_len * f, 0);
    for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t j = 0; j < pooled_len; ++j) {
            for (std::size_t ch = 0; ch < f; ++ch) {
                std::size_t best = j * config.pool;
                for (std::size_t l = best + 1; l < (j + 1) * config.pool; ++l) {
                    if (c.conv_out(b, l, ch) > c.conv_out(b, best, ch)) best = l;
                }
                c.pooled(b, j, ch) = c.conv_out(b, best, ch);
                c.pool_argmax[(b * pooled_len + j) * f + ch] = best;
            }
        }
    }
    c.norm = norm_forward(c.pooled, params.norm, control.norm, config.bn_epsilon);
    c.block_out = dropout_forward(c.norm.output, rate, control.dropout, rng, c.mask);

    const std::size_t pad_left = (config.kernel - 1) / 2;
    const Tensor3* x = &c.block_out;
    c.residual.resize(params.residual.size());
    for (std::size_t u = 0; u < params.residual.size(); ++u) {
        auto& rc = c.residual[u];
        const auto& rp = params.residual[u];
        rc.input = *x;
        rc.pre_activation = conv_forward(rc.input, rp.kernel, rp.bias, pad_left, pooled_len);
        rc.activation = relu_of(rc.pre_activation);
        rc.norm = norm_forward(rc.activation, rp.norm, control.norm, config.bn_epsilon);
        rc.output = dropout_forward(rc.norm.output, rate, control.dropout, rng, rc.mask);
        for (std::size_t i = 0; i < rc.output.values.size(); ++i) rc.output.values[i] += rc.input.values[i];
        x = &rc.output;
    }

    const std::size_t steps = pooled_len;
    const std::size_t g4 = 4 * h;
    c.gates.assign(steps, std::vector<double>(bsz * g4));
    c.cell.assign(steps, std::vector<double>(bsz * h));
    c.hidden.assign(steps, std::vector<double>(bsz * h));
    std::vector<double> z(g4);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < bsz; ++b) {
            std::copy(params.lstm_bias.values.begin(), params.lstm_bias.values.end(), z.begin());
            for (std::size_t in = 0; in < f; ++in) {
                const double xv = (*x)(b, t, in);
                const double* w = &params.lstm_kernel.values[in * g4];
                for (std::size_t j = 0; j < g4; ++j) z[j] += xv * w[j];
            }
            if (t > 0) {
                const double* hp = &c.hidden[t - 1][b * h];
                for (std::size_t k = 0; k < h; ++k) {
                    const double hv = hp[k];
                    const double* w = &params.lstm_recurrent.values[k * g4];
                    for (std::size_t j = 0; j < g4; ++j) z[j] += hv * w[j];
                }
            }
            double* gate = &c.gates[t][b * g4];
            double* cell = &c.cell[t][b * h];
            double* hid = &c.hidden[t][b * h];
            for (std::size_t k = 0; k < h; ++k) {
                const double ig = sigmoid(z[k]);
                const double fg = sigmoid(z[h + k]);
                const double gg = relu(z[2 * h + k]);
                const double og = sigmoid(z[3 * h + k]);
                gate[k] = ig;
                gate[h + k] = fg;
                gate[2 * h + k] = gg;
                gate[3 * h + k] = og;
                const double prev = t > 0 ? c.cell[t - 1][b * h + k] : 0.0;
                cell[k] = fg * prev + ig * gg;
                hid[k] = og * relu(cell[k]);
            }
        }
    }

    const auto& last = c.hidden[steps - 1];
    c.dense_pre.assign(bsz * d, 0.0);
    c.dense_out.assign(bsz * d, 0.0);
    c.logits.assign(bsz, 0.0);
    c.scores.assign(bsz, 0.0);
    for (std::size_t b = 0; b < bsz; ++b) {
        double* zd = &c.dense_pre[b * d];
        std::copy(params.dense_bias.values.begin(), params.dense_bias.values.end(), zd);
        for (std::size_t k = 0; k < h; ++k) {
            const double hv = last[b * h + k];
            const double* w = &params.dense_kernel.values[k * d];
            for (std::size_t j = 0; j < d; ++j) zd[j] += hv * w[j];
        }
        double logit = params.output_bias.values[0];
        for (std::size_t j = 0; j < d; ++j) {
            c.dense_out[b * d + j] = relu(zd[j]);
            logit += c.dense_out[b * d + j] * params.output_kernel.values[j];
        }
        c.logits[b] = logit;
        c.scores[b] = sigmoid(logit);
    }
    return c;
}

std::vector<double> predict(const DNetParams& params, const DNetConfig& config, const Tensor3& batch) {
    Rng unused(0);
    return forward(params, config, batch, ForwardControl::infer(), unused).scores;
}

double mean_bce(std::span<const double> logits, std::span<const int> labels) {
    if (logits.size() != labels.size() || logits.empty()) {
        throw Error("mean_bce: logits and labels must be non-empty and of equal length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        // -[y log s(z) + (1 - y) log(1 - s(z))] = softplus(z) - y z
        total += softplus(logits[i]) - labels[i] * logits[i];
    }
    return total / static_cast<double>(logits.size());
}

DNetParams backward(const DNetParams& params, const DNetConfig& config, const ForwardCache& c,
                    std::span<const int> labels) {
    const std::size_t bsz = c.logits.size();
    if (labels.size() != bsz) {
        throw Error("dnet backward: " + std::to_string(labels.size()) + " labels for a batch of " +
                    std::to_string(bsz));
    }
    const std::size_t f = config.conv_filters;
    const std::size_t h = config.lstm_units;
    const std::size_t d = config.dense_units;
    const std::size_t g4 = 4 * h;
    const std::size_t steps = c.hidden.size();
    const NormMode mode = c.control.norm;
    DNetParams grad = params.zeros_like();

    // Dense head.
    std::vector<double> dh(bsz * h, 0.0);
    for (std::size_t b = 0; b < bsz; ++b) {
        const double dlogit = (c.scores[b] - labels[b]) / static_cast<double>(bsz);
        grad.output_bias.values[0] += dlogit;
        std::vector<double> dzd(d);
        for (std::size_t j = 0; j < d; ++j) {
            grad.output_kernel.values[j] += c.dense_out[b * d + j] * dlogit;
            dzd[j] = c.dense_pre[b * d + j] > 0.0 ? params.output_kernel.values[j] * dlogit : 0.0;
            grad.dense_bias.values[j] += dzd[j];
        }
        const auto& last = c.hidden[steps - 1];
        for (std::size_t k = 0; k < h; ++k) {
            const double* w = &params.dense_kernel.values[k * d];
            double* dw = &grad.dense_kernel.values[k * d];
            const double hv = last[b * h + k];
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                dw[j] += hv * dzd[j];
                acc += w[j] * dzd[j];
            }
            dh[b * h + k] = acc;
        }
    }

    // LSTM, backpropagation through time.
    const Tensor3& seq = c.residual.empty() ? c.block_out : c.residual.back().output;
    Tensor3 dseq(seq.batch, seq.length, seq.channels);
    std::vector<double> dc(bsz * h, 0.0);
    std::vector<double> dz(g4);
    for (std::size_t t = steps; t-- > 0;) {
        std::vector<double> dh_prev(bsz * h, 0.0);
        for (std::size_t b = 0; b < bsz; ++b) {
            const double* gate = &c.gates[t][b * g4];
            const double* cell = &c.cell[t][b * h];
            for (std::size_t k = 0; k < h; ++k) {
                const double ig = gate[k];
                const double fg = gate[h + k];
                const double gg = gate[2 * h + k];
                const double og = gate[3 * h + k];
                const double prev = t > 0 ? c.cell[t - 1][b * h + k] : 0.0;
                const double dhv = dh[b * h + k];
                const double dcv = dc[b * h + k] + (cell[k] > 0.0 ? dhv * og : 0.0);
                dz[k] = dcv * gg * ig * (1.0 - ig);
                dz[h + k] = dcv * prev * fg * (1.0 - fg);
                dz[2 * h + k] = gg > 0.0 ? dcv * ig : 0.0;
                dz[3 * h + k] = dhv * relu(cell[k]) * og * (1.0 - og);
                dc[b * h + k] = dcv * fg;
            }
            for (std::size_t j = 0; j < g4; ++j) grad.lstm_bias.values[j] += dz[j];
            for (std::size_t in = 0; in < f; ++in) {
                const double xv = seq(b, t, in);
                const double* w = &params.lstm_kernel.values[in * g4];
                double* dw = &grad.lstm_kernel.values[in * g4];
                double acc = 0.0;
                for (std::size_t j = 0; j < g4; ++j) {
                    dw[j] += xv * dz[j];
                    acc += w[j] * dz[j];
                }
                dseq(b, t, in) = acc;
            }
            if (t > 0) {
                const double* hp = &c.hidden[t - 1][b * h];
                for (std::size_t k = 0; k < h; ++k) {
                    const double* w = &params.lstm_recurrent.values[k * g4];
                    double* dw = &grad.lstm_recurrent.values[k * g4];
                    double acc = 0.0;
                    for (std::size_t j = 0; j < g4; ++j) {
                        dw[j] += hp[k] * dz[j];
                        acc += w[j] * dz[j];
                    }
                    dh_prev[b * h + k] = acc;
                }
            }
        }
        dh.swap(dh_prev);
    }

    // Residual units in reverse; the skip path passes the gradient through unchanged.
    const std::size_t pad_left = (config.kernel - 1) / 2;
    Tensor3 dx = std::move(dseq);
    for (std::size_t u = params.residual.size(); u-- > 0;) {
        const auto& rc = c.residual[u];
        const auto& rp = params.residual[u];
        auto& rg = grad.residual[u];
        const Tensor3 dnorm_out = dropout_backward(dx, rc.mask);
        Tensor3 dact = norm_backward(rc.norm, rp.norm, dnorm_out, mode, rg.norm);
        for (std::size_t i = 0; i < dact.values.size(); ++i) {
            if (!(rc.pre_activation.values[i] > 0.0)) dact.values[i] = 0.0;
        }
        conv_backward(rc.input, rp.kernel, dact, pad_left, rg.kernel, rg.bias, &dx);
    }

    // First block.
    const Tensor3 dnorm_out = dropout_backward(dx, c.mask);
    const Tensor3 dpooled = norm_backward(c.norm, params.norm, dnorm_out, mode, grad.norm);
    Tensor3 dconv(c.conv_pre.batch, c.conv_pre.length, f);
    const std::size_t pooled_len = c.pooled.length;
    for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t j = 0; j < pooled_len; ++j) {
            for (std::size_t ch = 0; ch < f; ++ch) {
                const std::size_t l = c.pool_argmax[(b * pooled_len + j) * f + ch];
                if (c.conv_pre(b, l, ch) > 0.0) dconv(b, l, ch) += dpooled(b, j, ch);
            }
        }
    }
    conv_backward(c.input, params.conv_kernel, dconv, 0, grad.conv_kernel, grad.conv_bias, nullptr);
    return grad;
}

void update_running_stats(DNetParams& params, const DNetConfig& config, const ForwardCache& cache) {
    if (cache.control.norm != NormMode::batch_stats) return;
    const double m = config.bn_momentum;
    auto update = [m](BatchNormParams& p, const NormCache& nc) {
        for (std::size_t ch = 0; ch < nc.mean.size(); ++ch) {
            p.running_mean.values[ch] = m * p.running_mean.values[ch] + (1.0 - m) * nc.mean[ch];
            p.running_var.values[ch] = m * p.running_var.values[ch] + (1.0 - m) * nc.variance[ch];
        }
    };
    update(params.norm, cache.norm);
    for (std::size_t u = 0; u < params.residual.size(); ++u) update(params.residual[u].norm, cache.residual[u].norm);
}

TrainResult train(const DNetConfig& config, const Matrix& x, std::span<const int> y, const Matrix* valid_x,
                  std::span<const int> valid_y) {
    config.validate();
    require_fit_data(x, y, "dnet train");
    if (x.cols() != config.input_length) {
        throw Error("dnet train: " + std::to_string(x.cols()) + " features but input_length is " +
                    std::to_string(config.input_length));
    }
    if (valid_x != nullptr && valid_x->rows() != valid_y.size()) {
        throw Error("dnet train: validation rows and labels differ in length");
    }
    TrainResult result{build(config), {}};
    DNetParams& params = result.params;
    const std::size_t n = x.rows();
    const Tensor3 valid = valid_x != nullptr ? Tensor3::from_rows(*valid_x) : Tensor3{};

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(config, epoch);
        Rng rng(derive_seed(config.seed, epoch + 1));
        const auto order = permutation(n, rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0, batch_no = 0; start < n; start += config.batch_size, ++batch_no) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            std::vector<int> labels(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = y[rows[i]];
            const auto cache = forward(params, config, Tensor3::from_rows(x, rows), ForwardControl::train(), rng);
            const double loss = mean_bce(cache.logits, labels);
            if (!std::isfinite(loss)) {
                throw Error("dnet train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no) + " (lr " + format_roundtrip(lr) + ")");
            }
            loss_sum += loss * static_cast<double>(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                correct += ((cache.scores[i] >= 0.5 ? 1 : 0) == labels[i]) ? 1 : 0;
            }
            auto grads = backward(params, config, cache, labels);
            update_running_stats(params, config, cache);
            auto pg = params.groups();
            auto gg = grads.groups();
            for (std::size_t gi = 0; gi < pg.size(); ++gi) {
                if (!pg[gi].trainable) continue;
                auto& v = pg[gi].tensor->values;
                const auto& g = gg[gi].tensor->values;
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
            }
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        rec.valid_accuracy = std::numeric_limits<double>::quiet_NaN();
        if (valid_x != nullptr && valid_x->rows() > 0) {
            const auto scores = predict(params, config, valid);
            std::size_t ok = 0;
            for (std::size_t i = 0; i < scores.size(); ++i) ok += ((scores[i] >= 0.5 ? 1 : 0) == valid_y[i]) ? 1 : 0;
            rec.valid_accuracy = static_cast<double>(ok) / static_cast<double>(scores.size());
        }
        result.history.push_back(rec);
    }
    return result;
}

std::vector<GroupCheck> gradient_check(const DNetParams& params, const DNetConfig& config, const Tensor3& batch,
                                       std::span<const int> labels, NormMode norm, double step,
                                       std::size_t max_entries, double floor, std::uint64_t seed) {
    const ForwardControl control{norm, false};
    Rng unused(0);
    const auto base = forward(params, config, batch, control, unused);
    const auto base_pattern = activation_pattern(base);
    auto analytic = backward(params, config, base, labels);

    DNetParams probe = params;
    auto probe_groups = probe.groups();
    auto grad_groups = analytic.groups();
    Rng pick(seed);
    std::vector<GroupCheck> out;
    for (std::size_t gi = 0; gi < probe_groups.size(); ++gi) {
        if (!probe_groups[gi].trainable) continue;
        GroupCheck check{probe_groups[gi].name, 0, 0, 0.0};
        auto& values = probe_groups[gi].tensor->values;
        std::vector<std::size_t> entries = permutation(values.size(), pick);
        if (entries.size() > max_entries) entries.resize(max_entries);
        std::sort(entries.begin(), entries.end());
        for (auto i : entries) {
            const double original = values[i];
            values[i] = original + step;
            const auto plus = forward(probe, config, batch, control, unused);
            values[i] = original - step;
            const auto minus = forward(probe, config, batch, control, unused);
            values[i] = original;
            if (activation_pattern(plus) != base_pattern || activation_pattern(minus) != base_pattern) {
                ++check.skipped;
                continue;
            }
            const double numeric = (mean_bce(plus.logits, labels) - mean_bce(minus.logits, labels)) / (2.0 * step);
            const double a = grad_groups[gi].tensor->values[i];
            const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor);
            check.max_relative_error = std::max(check.max_relative_error, rel);
            ++check.checked;
        }
        out.push_back(check);
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const DNetConfig& config, const DNetParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write checkpoint '" + path.string() + "'");
    }
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << "config input_length " << config.input_length << '\n'
        << "config conv_filters " << config.conv_filters << '\n'
        << "config kernel " << config.kernel << '\n'
        << "config pool " << config.pool << '\n'
        << "config dropout_rate " << format_roundtrip(config.dropout_rate) << '\n'
        << "config residual_units " << config.residual_units << '\n'
        << "config lstm_units " << config.lstm_units << '\n'
        << "config dense_units " << config.dense_units << '\n'
        << "config lr0 " << format_roundtrip(config.lr0) << '\n'
        << "config decay " << format_roundtrip(config.decay) << '\n'
        << "config epochs " << config.epochs << '\n'
        << "config batch_size " << config.batch_size << '\n'
        << "config bn_epsilon " << format_roundtrip(config.bn_epsilon) << '\n'
        << "config bn_momentum " << format_roundtrip(config.bn_momentum) << '\n'
        << "config seed " << config.seed << '\n';
    DNetParams copy = params;
    for (const auto& g : copy.groups()) {
        out << "tensor " << g.name << ' ' << g.tensor->shape.size();
        for (auto s : g.tensor->shape) out << ' ' << s;
        out << '\n';
        for (double v : g.tensor->values) out << format_roundtrip(v) << '\n';
    }
    out << "end\n";
    if (!out) {
        throw Error("failed writing checkpoint '" + path.string() + "'");
    }
}

std::pair<DNetConfig, DNetParams> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint '" + path.string() + "'");
    }
    std::size_t line_no = 0;
    std::string line;
    auto fail = [&](const std::string& msg) -> Error {
        return Error("checkpoint '" + path.string() + "' line " + std::to_string(line_no) + ": " + msg);
    };
    auto next = [&]() {
        if (!std::getline(in, line)) throw fail("unexpected end of file");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };
    auto parse_double = [&](std::string_view s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw fail("bad number '" + std::string(s) + "'");
        return v;
    };
    auto parse_u64 = [&](std::string_view s) {
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw fail("bad integer '" + std::string(s) + "'");
        return v;
    };

    next();
    if (line != std::string(kCheckpointMagic) + ' ' + std::to_string(kCheckpointVersion)) {
        throw fail("not an earlyrisk DNet checkpoint (version " + std::to_string(kCheckpointVersion) + ")");
    }
    DNetConfig config;
    const std::vector<std::string> keys{"input_length", "conv_filters", "kernel",     "pool",       "dropout_rate",
                                        "residual_units", "lstm_units",  "dense_units", "lr0",       "decay",
                                        "epochs",       "batch_size",   "bn_epsilon", "bn_momentum", "seed"};
    for (const auto& key : keys) {
        next();
        std::istringstream ls(line);
        std::string tag;
        std::string name;
        std::string value;
        ls >> tag >> name >> value;
        if (tag != "config" || name != key) throw fail("expected config entry '" + key + "'");
        if (key == "input_length") config.input_length = parse_u64(value);
        else if (key == "conv_filters") config.conv_filters = parse_u64(value);
        else if (key == "kernel") config.kernel = parse_u64(value);
        else if (key == "pool") config.pool = parse_u64(value);
        else if (key == "dropout_rate") config.dropout_rate = parse_double(value);
        else if (key == "residual_units") config.residual_units = parse_u64(value);
        else if (key == "lstm_units") config.lstm_units = parse_u64(value);
        else if (key == "dense_units") config.dense_units = parse_u64(value);
        else if (key == "lr0") config.lr0 = parse_double(value);
        else if (key == "decay") config.decay = parse_double(value);
        else if (key == "epochs") config.epochs = parse_u64(value);
        else if (key == "batch_size") config.batch_size = parse_u64(value);
        else if (key == "bn_epsilon") config.bn_epsilon = parse_double(value);
        else if (key == "bn_momentum") config.bn_momentum = parse_double(value);
        else config.seed = parse_u64(value);
    }
    config.validate();
    DNetParams params = allocate(config);
    for (const auto& g : params.groups()) {
        next();
        std::istringstream ls(line);
        std::string tag;
        std::string name;
        std::size_t rank = 0;
        ls >> tag >> name >> rank;
        std::vector<std::size_t> shape(rank);
        for (auto& s : shape) ls >> s;
        if (tag != "tensor" || name != g.name || shape != g.tensor->shape) {
            throw fail("expected tensor '" + g.name + "' with the shape implied by the config");
        }
        for (auto& v : g.tensor->values) {
            next();
            v = parse_double(line);
        }
    }
    next();
    if (line != "end") throw fail("expected 'end'");
    return {config, params};
}

double DNetModel::score(std::span<const double> row) const {
    Tensor3 t(1, row.size(), 1);
    std::copy(row.begin(), row.end(), t.values.begin());
    return dnet::predict(params_, config_, t)[0];
}

std::vector<double> DNetModel::score_all(const Matrix& x) const {
    if (x.rows() == 0) return {};
    return dnet::predict(params_, config_, Tensor3::from_rows(x));
}

DNetModel fit_dnet(const Matrix& x, std::span<const int> y, const DNetConfig& config) {
    auto result = train(config, x, y);
    return DNetModel(config, std::move(result.params), std::move(result.history));
}

}  // namespace earlyrisk::dnet
