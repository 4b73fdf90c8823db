#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "earlyrisk/common.hpp"
#include "earlyrisk/model.hpp"
#include "earlyrisk/rng.hpp"

/// Hybrid convolution + residual + LSTM binary classifier with hand-written gradients.
///
/// Layer stack for a (batch, length, 1) input:
///   conv1d(valid, ReLU) -> maxpool -> batchnorm -> dropout
///   -> residual units [conv1d(same, ReLU) -> batchnorm -> dropout -> add skip]
///   -> LSTM(final hidden state) -> dense(ReLU) -> dense(1, sigmoid)
namespace earlyrisk::dnet {

/// Row-major (batch, length, channels) tensor.
struct Tensor3 {
    std::size_t batch = 0;
    std::size_t length = 0;
    std::size_t channels = 0;
    std::vector<double> values;

    Tensor3() = default;
    Tensor3(std::size_t b, std::size_t l, std::size_t c, double fill = 0.0)
        : batch(b), length(l), channels(c), values(b * l * c, fill) {}

    double& operator()(std::size_t b, std::size_t l, std::size_t c) { return values[(b * length + l) * channels + c]; }
    const double& operator()(std::size_t b, std::size_t l, std::size_t c) const {
        return values[(b * length + l) * channels + c];
    }
    std::array<std::size_t, 3> shape() const { return {batch, length, channels}; }

    /// Each row of `x` becomes a length-cols, one-channel sequence.
    static Tensor3 from_rows(const Matrix& x);
    static Tensor3 from_rows(const Matrix& x, std::span<const std::size_t> rows);
};

struct DNetConfig {
    std::size_t input_length = 10;
    std::size_t conv_filters = 64;
    std::size_t kernel = 3;
    std::size_t pool = 2;
    double dropout_rate = 0.5;
    std::size_t residual_units = 1;
    std::size_t lstm_units = 100;
    std::size_t dense_units = 50;
    double lr0 = 0.01;
    double decay = 0.9;
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    double bn_epsilon = 1e-3;
    double bn_momentum = 0.9;
    std::uint64_t seed = 0;

    /// Throws Error on an inconsistent configuration.
    void validate() const;
    std::size_t conv_length() const { return input_length - kernel + 1; }
    std::size_t pooled_length() const { return conv_length() / pool; }
    bool operator==(const DNetConfig&) const = default;
};

/// lr0 * decay^epoch rounded to 15 significant digits.
double lr_at(const DNetConfig& config, std::size_t epoch);

struct ParamTensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    ParamTensor() = default;
    explicit ParamTensor(std::vector<std::size_t> dims, double fill = 0.0);
    bool operator==(const ParamTensor&) const = default;
};

struct BatchNormParams {
    ParamTensor gamma;
    ParamTensor beta;
    ParamTensor running_mean;
    ParamTensor running_var;
    bool operator==(const BatchNormParams&) const = default;
};

struct ResidualUnitParams {
    ParamTensor kernel;  ///< (kernel, filters, filters)
    ParamTensor bias;
    BatchNormParams norm;
    bool operator==(const ResidualUnitParams&) const = default;
};

/// Every learned and running quantity of the network. Gradients use the same type
/// (running statistics stay zero there).
struct DNetParams {
    ParamTensor conv_kernel;  ///< (kernel, 1, filters)
    ParamTensor conv_bias;
    BatchNormParams norm;
    std::vector<ResidualUnitParams> residual;
    ParamTensor lstm_kernel;     ///< (filters, 4 units), gate blocks i, f, g, o
    ParamTensor lstm_recurrent;  ///< (units, 4 units)
    ParamTensor lstm_bias;       ///< (4 units)
    ParamTensor dense_kernel;    ///< (units, dense)
    ParamTensor dense_bias;
    ParamTensor output_kernel;   ///< (dense, 1)
    ParamTensor output_bias;

    struct Group {
        std::string name;
        ParamTensor* tensor;
        bool trainable;
    };
    std::vector<Group> groups();
    std::vector<const ParamTensor*> tensors() const;

    /// Same shapes, all zeros.
    DNetParams zeros_like() const;
    bool operator==(const DNetParams&) const = default;
};

/// Seeded initialization: He-normal convolution and dense kernels, Xavier-uniform LSTM
/// kernels, zero biases except the LSTM forget gate (1), batch-norm scale 1 and shift 0,
/// running statistics (0, 1).
DNetParams build(const DNetConfig& config);

enum class NormMode { batch_stats, running_stats };

struct ForwardControl {
    NormMode norm = NormMode::running_stats;
    bool dropout = false;

    static ForwardControl train() { return {NormMode::batch_stats, true}; }
    static ForwardControl infer() { return {NormMode::running_stats, false}; }
};

struct NormCache {
    Tensor3 normalized;  ///< x-hat
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<double> inv_std;
    Tensor3 output;
};

struct ResidualCache {
    Tensor3 input;
    Tensor3 pre_activation;
    Tensor3 activation;
    NormCache norm;
    std::vector<double> mask;
    Tensor3 output;
};

/// Intermediates of one forward pass, kept for backward.
struct ForwardCache {
    ForwardControl control;
    Tensor3 input;
    Tensor3 conv_pre;
    Tensor3 conv_out;
    Tensor3 pooled;
    std::vector<std::size_t> pool_argmax;
    NormCache norm;
    std::vector<double> mask;
    Tensor3 block_out;
    std::vector<ResidualCache> residual;
    /// Per step t (0-based), each (batch, 4 units) / (batch, units).
    std::vector<std::vector<double>> gates;
    std::vector<std::vector<double>> cell;
    std::vector<std::vector<double>> hidden;
    std::vector<double> dense_pre;
    std::vector<double> dense_out;
    std::vector<double> logits;
    std::vector<double> scores;
};

/// Runs the network. `rng` draws the dropout masks and is untouched without dropout.
ForwardCache forward(const DNetParams& params, const DNetConfig& config, const Tensor3& batch,
                     ForwardControl control, Rng& rng);

/// Inference-mode scores.
std::vector<double> predict(const DNetParams& params, const DNetConfig& config, const Tensor3& batch);

/// Mean binary cross-entropy computed from the logits.
double mean_bce(std::span<const double> logits, std::span<const int> labels);

/// Gradient of mean_bce of `cache.logits` with respect to every trainable parameter.
DNetParams backward(const DNetParams& params, const DNetConfig& config, const ForwardCache& cache,
                    std::span<const int> labels);

/// Batch-norm running-statistic update using the batch moments held in `cache`.
void update_running_stats(DNetParams& params, const DNetConfig& config, const ForwardCache& cache);

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    /// NaN without a validation set.
    double valid_accuracy = 0.0;
};

struct TrainResult {
    DNetParams params;
    std::vector<EpochRecord> history;
};

/// Mini-batch SGD with lr_at(epoch); batches reshuffled each epoch under a derived seed.
TrainResult train(const DNetConfig& config, const Matrix& x, std::span<const int> y, const Matrix* valid_x = nullptr,
                  std::span<const int> valid_y = {});

struct GroupCheck {
    std::string name;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    double max_relative_error = 0.0;
};

/// Central-difference check of backward() with dropout off. Up to `max_entries` entries
/// per group are compared (all when the group is smaller); relative error is
/// |a - n| / max(|a| + |n|, floor). Entries whose perturbation flips a ReLU or a
/// max-pool choice are not differentiable there and are counted in `skipped`.
std::vector<GroupCheck> gradient_check(const DNetParams& params, const DNetConfig& config, const Tensor3& batch,
                                       std::span<const int> labels, NormMode norm, double step = 1e-5,
                                       std::size_t max_entries = 200, double floor = 1e-6, std::uint64_t seed = 0);

/// Text checkpoint: a version line, the config, then one block per tensor with its
/// name and shape followed by shortest round-trip decimal values.
void save_checkpoint(const std::filesystem::path& path, const DNetConfig& config, const DNetParams& params);
std::pair<DNetConfig, DNetParams> load_checkpoint(const std::filesystem::path& path);

class DNetModel final : public ScoredModel {
public:
    DNetModel(DNetConfig config, DNetParams params, std::vector<EpochRecord> history = {})
        : config_(std::move(config)), params_(std::move(params)), history_(std::move(history)) {}

    double score(std::span<const double> row) const override;
    std::vector<double> score_all(const Matrix& x) const override;
    std::string name() const override { return "dnet"; }

    const DNetConfig& config() const noexcept { return config_; }
    const DNetParams& params() const noexcept { return params_; }
    const std::vector<EpochRecord>& history() const noexcept { return history_; }

private:
    DNetConfig config_;
    DNetParams params_;
    std::vector<EpochRecord> history_;
};

DNetModel fit_dnet(const Matrix& x, std::span<const int> y, const DNetConfig& config);

}  // namespace earlyrisk::dnet
