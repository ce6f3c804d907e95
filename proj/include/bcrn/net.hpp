#pragma once

#include <cstddef>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bcrn {

/// Dense row-major matrix, sized once at construction.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct Layer {
    Matrix weights;
    std::vector<double> bias;
};

struct ForwardDetail {
    double value = 0.0;             // V(s)
    std::vector<double> advantage;  // A(s, .)
    std::vector<double> q;          // V + (A - mean(A))
};

/// Dueling MLP: a shared rectified-linear trunk feeding a scalar value head
/// and a per-action advantage head, combined as Q = V + (A - mean(A)).
/// Parameters are plain values; copying a network copies its weights.
class QNetwork {
public:
    QNetwork() = default;

    /// Weights and biases uniform in +-1/sqrt(fan_in).
    static QNetwork init(int input_width, const std::vector<int>& hidden_widths,
                         int num_actions, std::mt19937_64& rng);

    int input_width() const { return input_width_; }
    int num_actions() const { return num_actions_; }
    const std::vector<int>& hidden_widths() const { return hidden_widths_; }
    bool same_architecture(const QNetwork& other) const;

    std::vector<double> forward(std::span<const double> x) const;
    ForwardDetail forward_detail(std::span<const double> x) const;

    /// Exact reverse-mode gradient of (y - Q(x)[action])^2 with respect to
    /// every parameter, accumulated into `grads` with the given scale.
    /// Returns the sample loss.
    double backward_accumulate(std::span<const double> x, int action, double y,
                               QNetwork& grads, double scale = 1.0) const;

    /// Same-shaped network with all parameters zero, used as a gradient buffer.
    QNetwork zeros_like() const;

    /// Mutable views over every parameter, trunk first, value head, advantage
    /// head. Order is stable and shared with the optimizer and the save format.
    std::vector<double*> parameters();
    std::vector<const double*> parameters() const;
    std::size_t parameter_count() const;

    void save(std::ostream& out) const;
    static QNetwork load(std::istream& in); // throws std::runtime_error on bad data
    void save_file(const std::string& path) const;
    static QNetwork load_file(const std::string& path);

    std::vector<Layer> trunk;
    Layer value_head;
    Layer advantage_head;

private:
    int input_width_ = 0;
    int num_actions_ = 0;
    std::vector<int> hidden_widths_;
};

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
};

/// One bias-corrected adaptive-moment update. Moment buffers are lazily sized
/// to the network on first use.
void adam_step(QNetwork& net, const QNetwork& grads, AdamState& opt);

/// Copy online parameters into the target network; throws on architecture
/// mismatch.
void sync_target(const QNetwork& online, QNetwork& target);

/// Max relative error between backward_accumulate and central finite
/// differences. Checks every parameter when the network has at most
/// `full_check_limit` of them, otherwise a random subsample of that size.
double grad_check(const QNetwork& net, std::span<const double> x, int action, double y,
                  double h = 1e-5, std::size_t full_check_limit = 400,
                  std::uint64_t subsample_seed = 0);

/// Comparison core of grad_check for externally supplied gradients.
double compare_gradients(const QNetwork& net, std::span<const double> x, int action, double y,
                         const QNetwork& grads, double h, std::size_t full_check_limit,
                         std::uint64_t subsample_seed);

}  // namespace bcrn
