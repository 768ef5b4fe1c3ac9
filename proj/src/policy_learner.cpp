#include "sindyrl/policy_learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sindyrl {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2) without cancellation for large |u|.
double log_tanh_jacobian(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

Matrix column_softmax(const Matrix& logits, Matrix* log_probs) {
    Matrix lp(logits.rows(), logits.cols());
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
        const double m = logits.col(b).maxCoeff();
        const double lse = m + std::log((logits.col(b).array() - m).exp().sum());
        lp.col(b) = logits.col(b).array() - lse;
    }
    if (log_probs) *log_probs = lp;
    return lp.array().exp().matrix();
}

void require_finite(double value, const char* what, const UpdateStats& s) {
    if (std::isfinite(value)) return;
    std::ostringstream msg;
    msg << "non-finite " << what << " (critic " << s.critic_loss << ", actor " << s.actor_loss << ", alpha "
        << s.alpha << ", entropy " << s.entropy << ")";
    throw NumericError(msg.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<int> sizes, std::mt19937_64& rng) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
    for (int s : sizes_) {
        if (s < 1) throw std::invalid_argument("Mlp layer sizes must be >= 1");
    }
    Eigen::Index total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(total);
        total += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
    }
    params_.resize(total);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
        std::uniform_real_distribution<double> init(-bound, bound);
        const Eigen::Index n = static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
        for (Eigen::Index i = 0; i < n; ++i) params_(offsets_[l] + i) = init(rng);
    }
}

Eigen::Map<const Matrix> Mlp::weight(std::size_t layer) const {
    return {params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Vector> Mlp::bias(std::size_t layer) const {
    return {params_.data() + offsets_[layer] + static_cast<Eigen::Index>(sizes_[layer]) * sizes_[layer + 1],
            sizes_[layer + 1]};
}

void Mlp::zero_output_layer(const Vector& b) {
    const std::size_t last = sizes_.size() - 2;
    const Eigen::Index w = static_cast<Eigen::Index>(sizes_[last]) * sizes_[last + 1];
    params_.segment(offsets_[last], w).setZero();
    if (b.size() == 0) {
        params_.segment(offsets_[last] + w, sizes_[last + 1]).setZero();
    } else {
        if (b.size() != sizes_[last + 1]) throw std::invalid_argument("output bias has wrong size");
        params_.segment(offsets_[last] + w, sizes_[last + 1]) = b;
    }
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const {
    if (x.rows() != input_dim()) throw std::invalid_argument("Mlp input has wrong row count");
    const std::size_t layers = sizes_.size() - 1;
    if (cache) {
        cache->inputs.resize(layers);
        cache->pre.resize(layers);
    }
    Matrix h = x;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z = weight(l) * h;
        z.colwise() += bias(l);
        if (cache) {
            cache->inputs[l] = std::move(h);
            cache->pre[l] = z;
        }
        h = (l + 1 < layers) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
    }
    return h;
}

void Mlp::backward(const Cache& cache, const Matrix& d_out, Vector& grad, Matrix* d_input) const {
    if (grad.size() != params_.size()) grad = Vector::Zero(params_.size());
    Matrix delta = d_out;
    for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
        if (l + 2 < sizes_.size()) delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
        const Eigen::Index rows = sizes_[l + 1], cols = sizes_[l];
        Eigen::Map<Matrix> gw(grad.data() + offsets_[l], rows, cols);
        Eigen::Map<Vector> gb(grad.data() + offsets_[l] + rows * cols, rows);
        gw.noalias() += delta * cache.inputs[l].transpose();
        gb += delta.rowwise().sum();
        if (l > 0 || d_input) delta = weight(l).transpose() * delta;
    }
    if (d_input) *d_input = std::move(delta);
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(Eigen::Index size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& grad) {
    if (grad.size() != m_.size() || params.size() != m_.size()) throw std::invalid_argument("Adam: size mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity, Eigen::Index obs_dim, Eigen::Index action_dim)
    : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("replay buffer capacity must be >= 1");
    const auto c = static_cast<Eigen::Index>(capacity);
    obs_.resize(obs_dim, c);
    next_obs_.resize(obs_dim, c);
    actions_.resize(action_dim, c);
    rewards_.resize(c);
    dones_.resize(c);
    sources_.resize(capacity);
}

void ReplayBuffer::add(const Vector& obs, const Vector& action, double reward, const Vector& next_obs, bool done,
                       Source source) {
    if (obs.size() != obs_.rows() || next_obs.size() != obs_.rows() || action.size() != actions_.rows()) {
        throw std::invalid_argument("replay buffer: transition has wrong dimensions");
    }
    const auto i = static_cast<Eigen::Index>(head_);
    obs_.col(i) = obs;
    actions_.col(i) = action;
    rewards_(i) = reward;
    next_obs_.col(i) = next_obs;
    dones_(i) = done ? 1.0 : 0.0;
    sources_[head_] = source;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

std::size_t ReplayBuffer::count(Source source) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size_; ++i) n += sources_[i] == source;
    return n;
}

void ReplayBuffer::clear() {
    size_ = 0;
    head_ = 0;
}

Batch ReplayBuffer::at(const std::vector<std::size_t>& indices) const {
    const auto b = static_cast<Eigen::Index>(indices.size());
    Batch out{Matrix(obs_.rows(), b), Matrix(actions_.rows(), b), Vector(b), Matrix(obs_.rows(), b), Vector(b)};
    for (Eigen::Index j = 0; j < b; ++j) {
        const std::size_t i = indices[static_cast<std::size_t>(j)];
        if (i >= size_) throw std::out_of_range("replay buffer index out of range");
        const auto c = static_cast<Eigen::Index>(i);
        out.obs.col(j) = obs_.col(c);
        out.actions.col(j) = actions_.col(c);
        out.rewards(j) = rewards_(c);
        out.next_obs.col(j) = next_obs_.col(c);
        out.dones(j) = dones_(c);
    }
    return out;
}

Batch ReplayBuffer::sample(std::size_t batch_size, std::mt19937_64& rng) const {
    if (size_ == 0) throw std::logic_error("cannot sample from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = pick(rng);
    return at(idx);
}

Batch ReplayBuffer::sample(std::size_t batch_size, std::mt19937_64& rng, Source source) const {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < size_; ++i) {
        if (sources_[i] == source) pool.push_back(i);
    }
    if (pool.empty()) throw std::logic_error("replay buffer holds no transitions with the requested source");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = pool[pick(rng)];
    return at(idx);
}

// ---------------------------------------------------------------------------
// SAC

void SacConfig::validate() const {
    if (hidden.empty()) throw std::invalid_argument("sac.hidden must list at least one layer");
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("sac.hidden sizes must be >= 1");
    }
    if (!(actor_lr > 0.0 && critic_lr > 0.0 && alpha_lr > 0.0)) throw std::invalid_argument("sac learning rates must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("sac.gamma must be in [0, 1]");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("sac.tau must be in (0, 1)");
    if (batch_size < 1) throw std::invalid_argument("sac.batch_size must be >= 1");
    if (!(initial_alpha > 0.0)) throw std::invalid_argument("sac.initial_alpha must be > 0");
    if (!(log_std_min < log_std_max)) throw std::invalid_argument("sac.log_std_min must be < log_std_max");
}

bool SacConfig::operator==(const SacConfig& o) const {
    const bool te = (std::isnan(target_entropy) && std::isnan(o.target_entropy)) || target_entropy == o.target_entropy;
    return te && hidden == o.hidden && actor_lr == o.actor_lr && critic_lr == o.critic_lr && alpha_lr == o.alpha_lr &&
           gamma == o.gamma && tau == o.tau && batch_size == o.batch_size && initial_alpha == o.initial_alpha &&
           learn_alpha == o.learn_alpha && log_std_min == o.log_std_min && log_std_max == o.log_std_max;
}

SacAgent::SacAgent(Eigen::Index obs_dim, ActionSpace space, SacConfig config, std::uint64_t seed)
    : obs_dim_(obs_dim), space_(std::move(space)), config_(std::move(config)) {
    config_.validate();
    if (obs_dim_ < 1) throw std::invalid_argument("SacAgent: obs_dim must be >= 1");
    const int k = static_cast<int>(space_.discrete ? space_.count : space_.dim());
    const int d = static_cast<int>(obs_dim_);
    if (std::isnan(config_.target_entropy)) {
        target_entropy_ = space_.discrete ? 0.6 * std::log(static_cast<double>(space_.count)) : -static_cast<double>(k);
    } else {
        target_entropy_ = config_.target_entropy;
    }

    std::mt19937_64 rng(seed);
    auto layers = [&](int in, int out) {
        std::vector<int> s{in};
        s.insert(s.end(), config_.hidden.begin(), config_.hidden.end());
        s.push_back(out);
        return s;
    };
    if (space_.discrete) {
        actor_ = Mlp(layers(d, k), rng);
        actor_.zero_output_layer(Vector());
        for (auto& c : critics_) c = Mlp(layers(d, k), rng);
    } else {
        actor_ = Mlp(layers(d, 2 * k), rng);
        // Mean 0 and log_std 0 at initialization.
        Vector b = Vector::Zero(2 * k);
        const double lo = config_.log_std_min, hi = config_.log_std_max;
        b.tail(k).setConstant(std::atanh(2.0 * (0.0 - lo) / (hi - lo) - 1.0));
        actor_.zero_output_layer(b);
        for (auto& c : critics_) c = Mlp(layers(d + k, 1), rng);
    }
    targets_[0] = critics_[0];
    targets_[1] = critics_[1];
    log_alpha_ = std::log(config_.initial_alpha);
    actor_opt_ = Adam(actor_.param_count(), config_.actor_lr);
    critic_opt_[0] = Adam(critics_[0].param_count(), config_.critic_lr);
    critic_opt_[1] = Adam(critics_[1].param_count(), config_.critic_lr);
    alpha_opt_ = Adam(1, config_.alpha_lr);
}

Matrix SacAgent::noise(Eigen::Index batch, std::mt19937_64& rng) const {
    if (space_.discrete) return Matrix();
    std::normal_distribution<double> n01;
    Matrix eps(space_.dim(), batch);
    for (Eigen::Index j = 0; j < batch; ++j) {
        for (Eigen::Index i = 0; i < eps.rows(); ++i) eps(i, j) = n01(rng);
    }
    return eps;
}

Matrix SacAgent::critic_input(const Matrix& obs, const Matrix& actions) const {
    Matrix x(obs.rows() + actions.rows(), obs.cols());
    x.topRows(obs.rows()) = obs;
    x.bottomRows(actions.rows()) = actions;
    return x;
}

SacAgent::PolicySample SacAgent::sample_continuous(const Matrix& obs, const Matrix& eps) const {
    const Eigen::Index k = space_.dim();
    PolicySample s;
    const Matrix out = actor_.forward(obs, &s.cache);
    s.mean = out.topRows(k);
    s.raw_log_std = out.bottomRows(k);
    const double lo = config_.log_std_min, hi = config_.log_std_max;
    s.log_std = (lo + 0.5 * (hi - lo) * (s.raw_log_std.array().tanh() + 1.0)).matrix();
    s.u = s.mean + s.log_std.array().exp().matrix().cwiseProduct(eps);
    s.actions = s.u.array().tanh().matrix();
    s.log_prob.resize(obs.cols());
    for (Eigen::Index b = 0; b < obs.cols(); ++b) {
        double lp = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            lp += -0.5 * eps(i, b) * eps(i, b) - s.log_std(i, b) - 0.5 * kLog2Pi - log_tanh_jacobian(s.u(i, b));
        }
        s.log_prob(b) = lp;
    }
    return s;
}

Vector SacAgent::probabilities(const Vector& obs) const {
    if (!space_.discrete) throw std::logic_error("probabilities() is only defined for discrete actions");
    return column_softmax(actor_.forward(obs), nullptr).col(0);
}

Vector SacAgent::act(const Vector& obs, bool deterministic, std::mt19937_64& rng) const {
    if (!obs.allFinite()) throw NumericError("act: non-finite observation");
    if (space_.discrete) {
        const Matrix logits = actor_.forward(obs);
        if (!logits.allFinite()) throw NumericError("act: non-finite policy logits");
        const Vector p = column_softmax(logits, nullptr).col(0);
        Eigen::Index best = 0;
        if (deterministic) {
            p.maxCoeff(&best);
        } else {
            double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            best = p.size() - 1;
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                u -= p(i);
                if (u < 0.0) {
                    best = i;
                    break;
                }
            }
        }
        return Vector::Constant(1, static_cast<double>(best));
    }
    const Eigen::Index k = space_.dim();
    Vector a;
    if (deterministic) {
        const Matrix out = actor_.forward(obs);
        if (!out.allFinite()) throw NumericError("act: non-finite policy output");
        a = out.col(0).head(k).array().tanh().matrix();
    } else {
        const PolicySample s = sample_continuous(obs, noise(1, rng));
        if (!s.actions.allFinite()) throw NumericError("act: non-finite policy output");
        a = s.actions.col(0);
    }
    return space_.clamp(space_.from_normalized(a));
}

Vector SacAgent::to_stored(const Vector& action) const {
    if (space_.discrete) return action;
    return space_.to_normalized(space_.clamp(action)).cwiseMax(-1.0).cwiseMin(1.0);
}

Vector SacAgent::from_stored(const Vector& stored) const {
    if (space_.discrete) return stored;
    return space_.from_normalized(stored);
}

double SacAgent::critic_loss(const Batch& batch, const Matrix& next_noise, Vector* grad) const {
    const Eigen::Index n = batch.size();
    const double alpha = std::exp(log_alpha_);
    Vector target(n);
    Mlp::Cache cache[2];
    Matrix q[2];

    if (space_.discrete) {
        Matrix next_lp;
        const Matrix next_p = column_softmax(actor_.forward(batch.next_obs), &next_lp);
        const Matrix tq = targets_[0].forward(batch.next_obs).cwiseMin(targets_[1].forward(batch.next_obs));
        for (Eigen::Index b = 0; b < n; ++b) {
            const double v = next_p.col(b).dot(tq.col(b) - alpha * next_lp.col(b));
            target(b) = batch.rewards(b) + config_.gamma * (1.0 - batch.dones(b)) * v;
        }
        for (int i = 0; i < 2; ++i) q[i] = critics_[i].forward(batch.obs, &cache[i]);
    } else {
        const PolicySample next = sample_continuous(batch.next_obs, next_noise);
        const Matrix next_in = critic_input(batch.next_obs, next.actions);
        const Matrix tq = targets_[0].forward(next_in).cwiseMin(targets_[1].forward(next_in));
        for (Eigen::Index b = 0; b < n; ++b) {
            const double v = tq(0, b) - alpha * next.log_prob(b);
            target(b) = batch.rewards(b) + config_.gamma * (1.0 - batch.dones(b)) * v;
        }
        const Matrix in = critic_input(batch.obs, batch.actions);
        for (int i = 0; i < 2; ++i) q[i] = critics_[i].forward(in, &cache[i]);
    }

    double loss = 0.0;
    Matrix d_out[2];
    for (int i = 0; i < 2; ++i) {
        d_out[i] = Matrix::Zero(q[i].rows(), n);
        for (Eigen::Index b = 0; b < n; ++b) {
            const Eigen::Index row = space_.discrete ? static_cast<Eigen::Index>(batch.actions(0, b)) : 0;
            const double err = q[i](row, b) - target(b);
            loss += err * err / static_cast<double>(n);
            d_out[i](row, b) = 2.0 * err / static_cast<double>(n);
        }
    }
    if (grad) {
        const Eigen::Index p0 = critics_[0].param_count();
        grad->setZero(p0 + critics_[1].param_count());
        Vector g0 = Vector::Zero(p0), g1 = Vector::Zero(critics_[1].param_count());
        critics_[0].backward(cache[0], d_out[0], g0);
        critics_[1].backward(cache[1], d_out[1], g1);
        grad->head(p0) = g0;
        grad->tail(g1.size()) = g1;
    }
    return loss;
}

double SacAgent::actor_loss(const Batch& batch, const Matrix& eps, Vector* grad) const {
    const Eigen::Index n = batch.size();
    const double alpha = std::exp(log_alpha_);
    const double inv_n = 1.0 / static_cast<double>(n);

    if (space_.discrete) {
        Mlp::Cache cache;
        Matrix lp;
        const Matrix p = column_softmax(actor_.forward(batch.obs, &cache), &lp);
        const Matrix q = critics_[0].forward(batch.obs).cwiseMin(critics_[1].forward(batch.obs));
        const Matrix g = alpha * lp - q;
        double loss = 0.0;
        Matrix dz(p.rows(), n);
        for (Eigen::Index b = 0; b < n; ++b) {
            const double mean_g = p.col(b).dot(g.col(b));
            loss += mean_g * inv_n;
            dz.col(b) = p.col(b).cwiseProduct((g.col(b).array() - mean_g).matrix()) * inv_n;
        }
        if (grad) {
            grad->setZero(actor_.param_count());
            actor_.backward(cache, dz, *grad);
        }
        return loss;
    }

    const Eigen::Index k = space_.dim();
    const PolicySample s = sample_continuous(batch.obs, eps);
    const Matrix in = critic_input(batch.obs, s.actions);
    Mlp::Cache cache[2];
    const Matrix q0 = critics_[0].forward(in, &cache[0]);
    const Matrix q1 = critics_[1].forward(in, &cache[1]);
    double loss = 0.0;
    Matrix sel[2] = {Matrix::Zero(1, n), Matrix::Zero(1, n)};
    for (Eigen::Index b = 0; b < n; ++b) {
        const bool first = q0(0, b) <= q1(0, b);
        loss += (alpha * s.log_prob(b) - (first ? q0(0, b) : q1(0, b))) * inv_n;
        sel[first ? 0 : 1](0, b) = 1.0;
    }
    if (!grad) return loss;

    // dQmin/da through whichever critic attains the minimum per sample.
    Matrix dq_da = Matrix::Zero(k, n);
    for (int i = 0; i < 2; ++i) {
        Vector scratch = Vector::Zero(critics_[i].param_count());
        Matrix d_in;
        critics_[i].backward(cache[i], sel[i], scratch, &d_in);
        dq_da += d_in.bottomRows(k);
    }
    const Matrix one_minus_a2 = (1.0 - s.actions.array().square()).matrix();
    const Matrix d_u = ((2.0 * alpha) * s.actions - dq_da.cwiseProduct(one_minus_a2)) * inv_n;
    const Matrix sigma_eps = s.log_std.array().exp().matrix().cwiseProduct(eps);
    const Matrix d_log_std = (d_u.cwiseProduct(sigma_eps).array() - alpha * inv_n).matrix();
    const double half_range = 0.5 * (config_.log_std_max - config_.log_std_min);
    const Matrix d_raw =
        d_log_std.cwiseProduct((half_range * (1.0 - s.raw_log_std.array().tanh().square())).matrix());
    Matrix d_out(2 * k, n);
    d_out.topRows(k) = d_u;
    d_out.bottomRows(k) = d_raw;
    grad->setZero(actor_.param_count());
    actor_.backward(s.cache, d_out, *grad);
    return loss;
}

double SacAgent::alpha_loss(const Batch& batch, const Matrix& eps, double* grad) const {
    const Eigen::Index n = batch.size();
    double mean_term = 0.0;
    if (space_.discrete) {
        Matrix lp;
        const Matrix p = column_softmax(actor_.forward(batch.obs), &lp);
        for (Eigen::Index b = 0; b < n; ++b) mean_term += p.col(b).dot(lp.col(b));
    } else {
        mean_term = sample_continuous(batch.obs, eps).log_prob.sum();
    }
    mean_term = mean_term / static_cast<double>(n) + target_entropy_;
    if (grad) *grad = -mean_term;
    return -log_alpha_ * mean_term;
}

void SacAgent::soft_update_targets() {
    const double tau = config_.tau;
    for (int i = 0; i < 2; ++i) {
        targets_[i].params() = tau * critics_[i].params() + (1.0 - tau) * targets_[i].params();
    }
}

UpdateStats SacAgent::update(const Batch& batch, std::mt19937_64& rng) {
    if (batch.size() < 1) throw std::invalid_argument("SAC update needs a nonempty batch");
    UpdateStats stats;
    stats.alpha = alpha();

    Vector g;
    stats.critic_loss = critic_loss(batch, noise(batch.size(), rng), &g);
    require_finite(stats.critic_loss, "critic loss", stats);
    if (!g.allFinite()) throw NumericError("non-finite critic gradient");
    const Eigen::Index p0 = critics_[0].param_count();
    Vector g0 = g.head(p0), g1 = g.tail(g.size() - p0);
    critic_opt_[0].step(critics_[0].params(), g0);
    critic_opt_[1].step(critics_[1].params(), g1);

    const Matrix eps = noise(batch.size(), rng);
    stats.actor_loss = actor_loss(batch, eps, &g);
    require_finite(stats.actor_loss, "actor loss", stats);
    if (!g.allFinite()) throw NumericError("non-finite actor gradient");
    actor_opt_.step(actor_.params(), g);

    double ga = 0.0;
    stats.alpha_loss = alpha_loss(batch, eps, &ga);
    stats.entropy = ga + target_entropy_;
    require_finite(stats.alpha_loss, "alpha loss", stats);
    if (config_.learn_alpha) {
        Vector la = Vector::Constant(1, log_alpha_);
        alpha_opt_.step(la, Vector::Constant(1, ga));
        log_alpha_ = la(0);
    }
    soft_update_targets();
    return stats;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointMagic = "sac-checkpoint";
constexpr int kCheckpointVersion = 1;

void write_tensor(std::ostream& out, const std::string& name, const Mlp& net) {
    out << name << " " << net.sizes().size();
    for (int s : net.sizes()) out << " " << s;
    out << " " << net.param_count() << "\n";
    for (Eigen::Index i = 0; i < net.param_count(); ++i) out << net.params()(i) << (i + 1 < net.param_count() ? " " : "");
    out << "\n";
}

void read_tensor(std::istream& in, const std::string& name, Mlp& net) {
    std::string tag;
    std::size_t layers = 0;
    if (!(in >> tag) || tag != name || !(in >> layers)) throw std::runtime_error("checkpoint: expected tensor " + name);
    std::vector<int> sizes(layers);
    for (auto& s : sizes) in >> s;
    Eigen::Index count = 0;
    in >> count;
    if (!in || sizes != net.sizes() || count != net.param_count()) {
        throw std::runtime_error("checkpoint: tensor " + name + " has an incompatible shape");
    }
    for (Eigen::Index i = 0; i < count; ++i) {
        std::string token;
        if (!(in >> token)) throw std::runtime_error("checkpoint: truncated tensor " + name);
        net.params()(i) = std::stod(token);
    }
}

}  // namespace

void SacAgent::save(std::ostream& out) const {
    out << kCheckpointMagic << " " << kCheckpointVersion << "\n" << std::setprecision(17);
    out << "log_alpha " << log_alpha_ << "\n";
    write_tensor(out, "actor", actor_);
    write_tensor(out, "critic0", critics_[0]);
    write_tensor(out, "critic1", critics_[1]);
    write_tensor(out, "target0", targets_[0]);
    write_tensor(out, "target1", targets_[1]);
}

void SacAgent::load(std::istream& in) {
    std::string magic, key, value;
    int version = 0;
    if (!(in >> magic >> version) || magic != kCheckpointMagic) throw std::runtime_error("checkpoint: bad header");
    if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
    if (!(in >> key >> value) || key != "log_alpha") throw std::runtime_error("checkpoint: expected log_alpha");
    log_alpha_ = std::stod(value);
    read_tensor(in, "actor", actor_);
    read_tensor(in, "critic0", critics_[0]);
    read_tensor(in, "critic1", critics_[1]);
    read_tensor(in, "target0", targets_[0]);
    read_tensor(in, "target1", targets_[1]);
}

void SacAgent::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    save(out);
}

void SacAgent::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint '" + path + "'");
    load(in);
}

// ---------------------------------------------------------------------------

EvaluationResult evaluate_policy(const SacAgent& agent, Environment& env, int episodes, std::uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
    EvaluationResult r;
    std::mt19937_64 unused(0);
    for (int e = 0; e < episodes; ++e) {
        Vector s = env.reset(seed + static_cast<std::uint64_t>(e));
        double ret = 0.0;
        int len = 0;
        while (true) {
            const StepResult step = env.step(agent.act(env.observe(s), true, unused));
            ret += step.reward;
            ++len;
            s = step.next_state;
            if (step.done) break;
        }
        r.returns.push_back(ret);
        r.lengths.push_back(len);
    }
    const double n = static_cast<double>(episodes);
    r.mean = std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : r.returns) ss += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(ss / n);
    return r;
}

}  // namespace sindyrl
