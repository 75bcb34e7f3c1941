#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slparse::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Parameter {
    std::string name;
    Mat value;
    Mat grad;

    void zero_grad() { grad.setZero(); }
};

/// Owns parameters in registration order; that order is the iteration
/// order everywhere (updates, checkpoints, checksums), which keeps runs
/// reproducible.
class ParameterStore {
  public:
    Parameter* add(std::string name, Eigen::Index rows, Eigen::Index cols);
    Parameter* find(std::string_view name) const;
    std::vector<Parameter*> all() const;
    void zero_grads();

  private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

/// Seed derived from the global seed and the parameter name only, so a
/// tensor's initialization does not depend on what else the model
/// contains.
std::uint64_t name_seed(std::uint64_t global_seed, std::string_view name);

void init_uniform(Parameter& p, double limit, std::uint64_t seed);
void init_glorot(Parameter& p, std::uint64_t seed);

/// FNV-1a over the raw bytes of the given parameters' values.
std::uint64_t checksum(std::span<Parameter* const> params);

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

/// Gate order in the stacked 4H rows: input, forget, cell, output.
struct LstmParams {
    Parameter* w = nullptr;  // (4H, In)
    Parameter* u = nullptr;  // (4H, H)
    Parameter* b = nullptr;  // (4H, 1)

    int hidden() const { return static_cast<int>(b->value.rows()) / 4; }
};

LstmParams make_lstm(ParameterStore& store, const std::string& prefix,
                     int input_dim, int hidden_dim, std::uint64_t seed);

struct LstmCache {
    std::vector<Vec> x, gi, gf, gg, go, c, tanh_c, h;
};

/// Processes xs in order from a zero initial state; returns one hidden
/// vector per step. cache may be null when no backward pass follows.
std::vector<Vec> lstm_forward(const LstmParams& p, const std::vector<Vec>& xs,
                              LstmCache* cache);

/// Backpropagation through time. dh holds the gradient on each output;
/// parameter gradients are accumulated; returns gradients on the inputs.
std::vector<Vec> lstm_backward(const LstmParams& p, const LstmCache& cache,
                               const std::vector<Vec>& dh);

struct BiLstmParams {
    LstmParams fwd, bwd;
};

BiLstmParams make_bilstm(ParameterStore& store, const std::string& prefix,
                         int input_dim, int hidden_per_dir,
                         std::uint64_t seed);

struct BiLstmCache {
    LstmCache fwd, bwd;
};

/// y_i = [forward state at i ; backward state at i], so every output
/// depends on both the left and the right context.
std::vector<Vec> bilstm_forward(const BiLstmParams& p,
                                const std::vector<Vec>& xs, BiLstmCache* cache);

std::vector<Vec> bilstm_backward(const BiLstmParams& p, const BiLstmCache& cache,
                                 const std::vector<Vec>& dy);

// ---------------------------------------------------------------------------

/// Numerically stable cross-entropy; returns -log softmax(logits)[gold]
/// and, when dlogits is non-null, writes softmax(logits) - onehot(gold).
double softmax_cross_entropy(const Vec& logits, int gold, Vec* dlogits);

/// Ties resolve to the lowest index.
int argmax(const Vec& v);

/// Inverted dropout: zeroes with probability rate, scales kept units by
/// 1/(1-rate). Returns the applied mask for the backward pass.
Vec dropout_mask(Eigen::Index size, double rate, std::mt19937_64& rng);

/// Gradient step with classical momentum: v = mu*v - lr*grad.
class SgdMomentum {
  public:
    explicit SgdMomentum(double momentum) : momentum_(momentum) {}

    void step(std::span<Parameter* const> params, double lr);

  private:
    double momentum_;
    std::map<Parameter*, Mat> velocity_;
};

}  // namespace slparse::nn
