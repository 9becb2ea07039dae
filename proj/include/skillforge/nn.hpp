#pragma once

#include <vector>

#include "skillforge/checkpoint.hpp"
#include "skillforge/common.hpp"
#include "skillforge/rng.hpp"

namespace skillforge::nn {

struct Linear {
    Matrix w;
    Vector b;
    Matrix gw;
    Vector gb;

    Linear(int in, int out, Rng& rng);
};

/// Fully-connected network with ReLU hidden activations and a linear output.
/// Batches are column-major: x is (in_dim x batch). forward() caches the
/// activations consumed by the following backward().
class Mlp {
public:
    Mlp() = default;
    Mlp(int in, const std::vector<int>& hidden, int out, Rng& rng);

    Matrix forward(const Matrix& x);
    Vector forward(const Vector& x);

    /// Forward pass without touching the backward cache; safe for concurrent
    /// readers.
    Matrix apply(const Matrix& x) const;
    Vector apply(const Vector& x) const;

    /// grad_out is dLoss/d(output), same shape as the last forward's output.
    /// Accumulates parameter gradients and returns dLoss/d(input).
    Matrix backward(const Matrix& grad_out);

    void zero_grad();

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }

    std::size_t param_count() const;
    Vector flat_params() const;
    void set_flat_params(const Vector& p);
    Vector flat_grads() const;

    /// Visits every parameter paired with its gradient slot, in a fixed order.
    template <class F>
    void for_each_param(F&& f) {
        for (auto& l : layers_) {
            for (Eigen::Index i = 0; i < l.w.size(); ++i) f(l.w.data()[i], l.gw.data()[i]);
            for (Eigen::Index i = 0; i < l.b.size(); ++i) f(l.b.data()[i], l.gb.data()[i]);
        }
    }

    std::vector<Linear>& layers() { return layers_; }
    const std::vector<Linear>& layers() const { return layers_; }

    void save(BlobWriter& w) const;
    void load(BlobReader& r);

private:
    int in_dim_ = 0;
    int out_dim_ = 0;
    std::vector<Linear> layers_;
    std::vector<Matrix> inputs_;   // input to each layer from the last forward
    std::vector<Matrix> preacts_;  // pre-activation of each layer
};

class Adam {
public:
    Adam() = default;
    Adam(std::size_t param_count, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    /// Applies one descent step using the gradients stored in the net, then
    /// leaves the gradients untouched (callers zero_grad explicitly).
    void step(Mlp& net);

    double lr() const { return lr_; }
    long steps_taken() const { return t_; }

    void save(BlobWriter& w) const;
    void load(BlobReader& r);

private:
    double lr_ = 0, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    Vector m_, v_;
};

/// target <- tau * online + (1 - tau) * target
void polyak_update(Mlp& target, const Mlp& online, double tau);

bool all_grads_finite(Mlp& net);

}  // namespace skillforge::nn
