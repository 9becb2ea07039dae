#include "skillforge/nn.hpp"

#include <cmath>

namespace skillforge::nn {

Linear::Linear(int in, int out, Rng& rng) : w(out, in), b(Vector::Zero(out)), gw(out, in), gb(out) {
    double s = std::sqrt(6.0 / (in + out));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-s, s);
    gw.setZero();
    gb.setZero();
}

Mlp::Mlp(int in, const std::vector<int>& hidden, int out, Rng& rng) : in_dim_(in), out_dim_(out) {
    int prev = in;
    for (int h : hidden) {
        layers_.emplace_back(prev, h, rng);
        prev = h;
    }
    layers_.emplace_back(prev, out, rng);
}

Matrix Mlp::forward(const Matrix& x) {
    inputs_.assign(layers_.size(), Matrix());
    preacts_.assign(layers_.size(), Matrix());
    Matrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        inputs_[l] = a;
        Matrix z = (layers_[l].w * a).colwise() + layers_[l].b;
        preacts_[l] = z;
        if (l + 1 < layers_.size())
            a = z.cwiseMax(0.0);
        else
            a = std::move(z);
    }
    return a;
}

Vector Mlp::forward(const Vector& x) {
    return Vector(forward(Matrix(x)));
}

Matrix Mlp::apply(const Matrix& x) const {
    Matrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix z = (layers_[l].w * a).colwise() + layers_[l].b;
        if (l + 1 < layers_.size())
            a = z.cwiseMax(0.0);
        else
            a = std::move(z);
    }
    return a;
}

Vector Mlp::apply(const Vector& x) const {
    return Vector(apply(Matrix(x)));
}

Matrix Mlp::backward(const Matrix& grad_out) {
    Matrix dz = grad_out;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        if (li + 1 < layers_.size()) {
            // dz arrives as dL/da for a hidden layer; apply ReLU mask.
            dz = dz.cwiseProduct((preacts_[li].array() > 0.0).cast<double>().matrix());
        }
        layers_[li].gw.noalias() += dz * inputs_[li].transpose();
        layers_[li].gb.noalias() += dz.rowwise().sum();
        if (li > 0) dz = layers_[li].w.transpose() * dz;
    }
    return layers_[0].w.transpose() * dz;
}

void Mlp::zero_grad() {
    for (auto& l : layers_) {
        l.gw.setZero();
        l.gb.setZero();
    }
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
    return n;
}

Vector Mlp::flat_params() const {
    Vector p(static_cast<Eigen::Index>(param_count()));
    Eigen::Index k = 0;
    for (const auto& l : layers_) {
        for (Eigen::Index i = 0; i < l.w.size(); ++i) p[k++] = l.w.data()[i];
        for (Eigen::Index i = 0; i < l.b.size(); ++i) p[k++] = l.b.data()[i];
    }
    return p;
}

void Mlp::set_flat_params(const Vector& p) {
    Eigen::Index k = 0;
    for (auto& l : layers_) {
        for (Eigen::Index i = 0; i < l.w.size(); ++i) l.w.data()[i] = p[k++];
        for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b.data()[i] = p[k++];
    }
    if (k != p.size()) throw std::invalid_argument("set_flat_params: size mismatch");
}

Vector Mlp::flat_grads() const {
    Vector g(static_cast<Eigen::Index>(param_count()));
    Eigen::Index k = 0;
    for (const auto& l : layers_) {
        for (Eigen::Index i = 0; i < l.gw.size(); ++i) g[k++] = l.gw.data()[i];
        for (Eigen::Index i = 0; i < l.gb.size(); ++i) g[k++] = l.gb.data()[i];
    }
    return g;
}

void Mlp::save(BlobWriter& w) const {
    w.put_u64(layers_.size());
    w.put_i64(in_dim_);
    w.put_i64(out_dim_);
    for (const auto& l : layers_) {
        w.put_matrix(l.w);
        w.put_vector(l.b);
    }
}

void Mlp::load(BlobReader& r) {
    auto n = r.get_u64();
    in_dim_ = static_cast<int>(r.get_i64());
    out_dim_ = static_cast<int>(r.get_i64());
    layers_.clear();
    Rng dummy(0);
    for (std::uint64_t i = 0; i < n; ++i) {
        Matrix w = r.get_matrix();
        Vector b = r.get_vector();
        Linear l(static_cast<int>(w.cols()), static_cast<int>(w.rows()), dummy);
        l.w = std::move(w);
        l.b = std::move(b);
        l.gw.setZero();
        l.gb.setZero();
        layers_.push_back(std::move(l));
    }
}

Adam::Adam(std::size_t param_count, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(Vector::Zero(static_cast<Eigen::Index>(param_count))),
      v_(Vector::Zero(static_cast<Eigen::Index>(param_count))) {}

void Adam::step(Mlp& net) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    Eigen::Index k = 0;
    net.for_each_param([&](double& p, double& g) {
        m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
        v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
        p -= lr_ * (m_[k] / bc1) / (std::sqrt(v_[k] / bc2) + eps_);
        ++k;
    });
}

void Adam::save(BlobWriter& w) const {
    w.put_f64(lr_);
    w.put_f64(beta1_);
    w.put_f64(beta2_);
    w.put_f64(eps_);
    w.put_i64(t_);
    w.put_vector(m_);
    w.put_vector(v_);
}

void Adam::load(BlobReader& r) {
    lr_ = r.get_f64();
    beta1_ = r.get_f64();
    beta2_ = r.get_f64();
    eps_ = r.get_f64();
    t_ = r.get_i64();
    m_ = r.get_vector();
    v_ = r.get_vector();
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
    auto& tl = target.layers();
    const auto& ol = online.layers();
    for (std::size_t i = 0; i < tl.size(); ++i) {
        tl[i].w = tau * ol[i].w + (1.0 - tau) * tl[i].w;
        tl[i].b = tau * ol[i].b + (1.0 - tau) * tl[i].b;
    }
}

bool all_grads_finite(Mlp& net) {
    bool ok = true;
    net.for_each_param([&](double&, double& g) {
        if (!std::isfinite(g)) ok = false;
    });
    return ok;
}

}  // namespace skillforge::nn
