#include "slparse/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace slparse::nn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Parameter* ParameterStore::add(std::string name, Eigen::Index rows,
                               Eigen::Index cols) {
    if (find(name))
        throw std::logic_error("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->value = Mat::Zero(rows, cols);
    p->grad = Mat::Zero(rows, cols);
    params_.push_back(std::move(p));
    return params_.back().get();
}

Parameter* ParameterStore::find(std::string_view name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

std::vector<Parameter*> ParameterStore::all() const {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

void ParameterStore::zero_grads() {
    for (const auto& p : params_) p->zero_grad();
}

std::uint64_t name_seed(std::uint64_t global_seed, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV offset basis
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h ^ splitmix64(global_seed));
}

void init_uniform(Parameter& p, double limit, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < p.value.cols(); ++j)
        for (Eigen::Index i = 0; i < p.value.rows(); ++i)
            p.value(i, j) = dist(rng);
}

void init_glorot(Parameter& p, std::uint64_t seed) {
    const double fan_in = static_cast<double>(p.value.cols());
    const double fan_out = static_cast<double>(p.value.rows());
    init_uniform(p, std::sqrt(6.0 / (fan_in + fan_out)), seed);
}

std::uint64_t checksum(std::span<Parameter* const> params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Parameter* p : params) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(
            p->value.data());
        const std::size_t n = sizeof(double) *
                              static_cast<std::size_t>(p->value.size());
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

LstmParams make_lstm(ParameterStore& store, const std::string& prefix,
                     int input_dim, int hidden_dim, std::uint64_t seed) {
    LstmParams p;
    p.w = store.add(prefix + ".w", 4 * hidden_dim, input_dim);
    p.u = store.add(prefix + ".u", 4 * hidden_dim, hidden_dim);
    p.b = store.add(prefix + ".b", 4 * hidden_dim, 1);
    init_glorot(*p.w, name_seed(seed, p.w->name));
    init_glorot(*p.u, name_seed(seed, p.u->name));
    return p;
}

std::vector<Vec> lstm_forward(const LstmParams& p, const std::vector<Vec>& xs,
                              LstmCache* cache) {
    const int H = p.hidden();
    const std::size_t T = xs.size();
    std::vector<Vec> hs(T);
    Vec h_prev = Vec::Zero(H);
    Vec c_prev = Vec::Zero(H);
    if (cache) {
        cache->x = xs;
        cache->gi.resize(T);
        cache->gf.resize(T);
        cache->gg.resize(T);
        cache->go.resize(T);
        cache->c.resize(T);
        cache->tanh_c.resize(T);
        cache->h.resize(T);
    }
    for (std::size_t t = 0; t < T; ++t) {
        Vec a = p.w->value * xs[t] + p.u->value * h_prev + p.b->value.col(0);
        Vec gi = a.segment(0, H).unaryExpr(
            [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Vec gf = a.segment(H, H).unaryExpr(
            [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Vec gg = a.segment(2 * H, H).array().tanh();
        Vec go = a.segment(3 * H, H).unaryExpr(
            [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Vec c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
        Vec tc = c.array().tanh();
        Vec h = go.cwiseProduct(tc);
        if (cache) {
            cache->gi[t] = gi;
            cache->gf[t] = gf;
            cache->gg[t] = gg;
            cache->go[t] = go;
            cache->c[t] = c;
            cache->tanh_c[t] = tc;
            cache->h[t] = h;
        }
        hs[t] = h;
        h_prev = std::move(h);
        c_prev = std::move(c);
    }
    return hs;
}

std::vector<Vec> lstm_backward(const LstmParams& p, const LstmCache& cache,
                               const std::vector<Vec>& dh) {
    const int H = p.hidden();
    const std::size_t T = cache.x.size();
    std::vector<Vec> dx(T);
    Vec dh_next = Vec::Zero(H);
    Vec dc_next = Vec::Zero(H);
    for (std::size_t t = T; t-- > 0;) {
        const Vec& gi = cache.gi[t];
        const Vec& gf = cache.gf[t];
        const Vec& gg = cache.gg[t];
        const Vec& go = cache.go[t];
        const Vec& tc = cache.tanh_c[t];

        Vec dh_total = dh[t] + dh_next;
        Vec dgo = dh_total.cwiseProduct(tc);
        Vec dc = dc_next +
                 dh_total.cwiseProduct(go).cwiseProduct(
                     (1.0 - tc.array().square()).matrix());
        Vec dgi = dc.cwiseProduct(gg);
        Vec dgg = dc.cwiseProduct(gi);
        Vec dgf = t > 0 ? dc.cwiseProduct(cache.c[t - 1]) : Vec(Vec::Zero(H));
        dc_next = dc.cwiseProduct(gf);

        Vec da(4 * H);
        da.segment(0, H) =
            dgi.cwiseProduct(gi).cwiseProduct((1.0 - gi.array()).matrix());
        da.segment(H, H) =
            dgf.cwiseProduct(gf).cwiseProduct((1.0 - gf.array()).matrix());
        da.segment(2 * H, H) =
            dgg.cwiseProduct((1.0 - gg.array().square()).matrix());
        da.segment(3 * H, H) =
            dgo.cwiseProduct(go).cwiseProduct((1.0 - go.array()).matrix());

        p.w->grad += da * cache.x[t].transpose();
        if (t > 0) p.u->grad += da * cache.h[t - 1].transpose();
        p.b->grad.col(0) += da;

        dx[t] = p.w->value.transpose() * da;
        dh_next = p.u->value.transpose() * da;
    }
    return dx;
}

BiLstmParams make_bilstm(ParameterStore& store, const std::string& prefix,
                         int input_dim, int hidden_per_dir,
                         std::uint64_t seed) {
    BiLstmParams p;
    p.fwd = make_lstm(store, prefix + ".fwd", input_dim, hidden_per_dir, seed);
    p.bwd = make_lstm(store, prefix + ".bwd", input_dim, hidden_per_dir, seed);
    return p;
}

std::vector<Vec> bilstm_forward(const BiLstmParams& p,
                                const std::vector<Vec>& xs,
                                BiLstmCache* cache) {
    const std::size_t T = xs.size();
    std::vector<Vec> rev(xs.rbegin(), xs.rend());
    std::vector<Vec> hf =
        lstm_forward(p.fwd, xs, cache ? &cache->fwd : nullptr);
    std::vector<Vec> hb =
        lstm_forward(p.bwd, rev, cache ? &cache->bwd : nullptr);
    std::vector<Vec> ys(T);
    const Eigen::Index hf_dim = hf.empty() ? 0 : hf[0].size();
    const Eigen::Index hb_dim = hb.empty() ? 0 : hb[0].size();
    for (std::size_t i = 0; i < T; ++i) {
        ys[i].resize(hf_dim + hb_dim);
        ys[i] << hf[i], hb[T - 1 - i];
    }
    return ys;
}

std::vector<Vec> bilstm_backward(const BiLstmParams& p,
                                 const BiLstmCache& cache,
                                 const std::vector<Vec>& dy) {
    const std::size_t T = dy.size();
    const int hf_dim = p.fwd.hidden();
    const int hb_dim = p.bwd.hidden();
    std::vector<Vec> dhf(T), dhb(T);
    for (std::size_t i = 0; i < T; ++i) {
        dhf[i] = dy[i].segment(0, hf_dim);
        dhb[T - 1 - i] = dy[i].segment(hf_dim, hb_dim);
    }
    std::vector<Vec> dxf = lstm_backward(p.fwd, cache.fwd, dhf);
    std::vector<Vec> dxb = lstm_backward(p.bwd, cache.bwd, dhb);
    std::vector<Vec> dx(T);
    for (std::size_t i = 0; i < T; ++i) dx[i] = dxf[i] + dxb[T - 1 - i];
    return dx;
}

double softmax_cross_entropy(const Vec& logits, int gold, Vec* dlogits) {
    const double max_logit = logits.maxCoeff();
    Vec shifted = logits.array() - max_logit;
    Vec exps = shifted.array().exp();
    const double z = exps.sum();
    const double log_prob = shifted(gold) - std::log(z);
    if (dlogits) {
        *dlogits = exps / z;
        (*dlogits)(gold) -= 1.0;
    }
    return -log_prob;
}

int argmax(const Vec& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = static_cast<int>(i);
    return best;
}

Vec dropout_mask(Eigen::Index size, double rate, std::mt19937_64& rng) {
    Vec mask(size);
    if (rate <= 0.0) {
        mask.setOnes();
        return mask;
    }
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < size; ++i)
        mask(i) = dist(rng) < rate ? 0.0 : scale;
    return mask;
}

void SgdMomentum::step(std::span<Parameter* const> params, double lr) {
    for (Parameter* p : params) {
        auto [it, inserted] = velocity_.try_emplace(p);
        if (inserted) it->second = Mat::Zero(p->value.rows(), p->value.cols());
        it->second = momentum_ * it->second - lr * p->grad;
        p->value += it->second;
    }
}

}  // namespace slparse::nn
