#include "bcrn/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace bcrn {

namespace {

Layer init_layer(int out, int in, std::mt19937_64& rng) {
    Layer layer;
    layer.weights = Matrix(out, in);
    layer.bias.assign(static_cast<std::size_t>(out), 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& w : layer.weights.data) w = u(rng);
    // Nonzero bias init keeps pre-activations off the exact rectifier kink,
    // where finite differences and the subgradient legitimately disagree.
    for (double& b : layer.bias) b = u(rng);
    return layer;
}

// y = W x + b
void affine(const Layer& l, std::span<const double> x, std::vector<double>& y) {
    y.assign(static_cast<std::size_t>(l.weights.rows), 0.0);
    for (int r = 0; r < l.weights.rows; ++r) {
        const double* row = l.weights.data.data() + static_cast<std::size_t>(r) * l.weights.cols;
        double acc = l.bias[static_cast<std::size_t>(r)];
        for (int c = 0; c < l.weights.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
}

void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void collect(std::vector<double*>& out, Layer& l) {
    for (double& w : l.weights.data) out.push_back(&w);
    for (double& b : l.bias) out.push_back(&b);
}

}  // namespace

QNetwork QNetwork::init(int input_width, const std::vector<int>& hidden_widths,
                        int num_actions, std::mt19937_64& rng) {
    if (input_width <= 0 || num_actions <= 0)
        throw std::invalid_argument("network widths must be positive");
    for (int w : hidden_widths)
        if (w <= 0) throw std::invalid_argument("hidden widths must be positive");

    QNetwork net;
    net.input_width_ = input_width;
    net.num_actions_ = num_actions;
    net.hidden_widths_ = hidden_widths;
    int in = input_width;
    for (int w : hidden_widths) {
        net.trunk.push_back(init_layer(w, in, rng));
        in = w;
    }
    net.value_head = init_layer(1, in, rng);
    net.advantage_head = init_layer(num_actions, in, rng);
    return net;
}

bool QNetwork::same_architecture(const QNetwork& other) const {
    return input_width_ == other.input_width_ && num_actions_ == other.num_actions_ &&
           hidden_widths_ == other.hidden_widths_;
}

ForwardDetail QNetwork::forward_detail(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_width_)
        throw std::invalid_argument("input width mismatch");
    std::vector<double> h(x.begin(), x.end());
    std::vector<double> next;
    for (const auto& layer : trunk) {
        affine(layer, h, next);
        relu_inplace(next);
        h.swap(next);
    }
    ForwardDetail out;
    std::vector<double> v;
    affine(value_head, h, v);
    out.value = v[0];
    affine(advantage_head, h, out.advantage);
    const double mean_adv =
        std::accumulate(out.advantage.begin(), out.advantage.end(), 0.0) / num_actions_;
    out.q.resize(out.advantage.size());
    for (std::size_t i = 0; i < out.q.size(); ++i)
        out.q[i] = out.value + out.advantage[i] - mean_adv;
    return out;
}

std::vector<double> QNetwork::forward(std::span<const double> x) const {
    return forward_detail(x).q;
}

double QNetwork::backward_accumulate(std::span<const double> x, int action, double y,
                                     QNetwork& grads, double scale) const {
    if (static_cast<int>(x.size()) != input_width_)
        throw std::invalid_argument("input width mismatch");
    if (!same_architecture(grads)) throw std::invalid_argument("gradient buffer shape mismatch");
    if (action < 0 || action >= num_actions_) throw std::invalid_argument("action out of range");

    // Forward with cached activations.
    std::vector<std::vector<double>> acts; // acts[0] = input, acts[l+1] = relu output of layer l
    acts.emplace_back(x.begin(), x.end());
    for (const auto& layer : trunk) {
        std::vector<double> z;
        affine(layer, acts.back(), z);
        relu_inplace(z);
        acts.push_back(std::move(z));
    }
    const auto& h = acts.back();
    std::vector<double> v;
    affine(value_head, h, v);
    std::vector<double> adv;
    affine(advantage_head, h, adv);
    const double mean_adv = std::accumulate(adv.begin(), adv.end(), 0.0) / num_actions_;
    const double q_a = v[0] + adv[static_cast<std::size_t>(action)] - mean_adv;

    const double err = y - q_a;
    const double loss = err * err;
    // dL/dQ_a, with the caller's scale folded in (batch averaging).
    const double gq = scale * (-2.0 * err);

    // Heads. dQ_a/dV = 1; dQ_a/dA_j = [j == a] - 1/|A|.
    const double gv = gq;
    std::vector<double> ga(static_cast<std::size_t>(num_actions_), -gq / num_actions_);
    ga[static_cast<std::size_t>(action)] += gq;

    std::vector<double> gh(h.size(), 0.0);
    for (int c = 0; c < value_head.weights.cols; ++c) {
        grads.value_head.weights.at(0, c) += gv * h[static_cast<std::size_t>(c)];
        gh[static_cast<std::size_t>(c)] += gv * value_head.weights.at(0, c);
    }
    grads.value_head.bias[0] += gv;
    for (int r = 0; r < advantage_head.weights.rows; ++r) {
        const double g = ga[static_cast<std::size_t>(r)];
        if (g == 0.0) continue;
        const double* row =
            advantage_head.weights.data.data() + static_cast<std::size_t>(r) * advantage_head.weights.cols;
        double* grow = grads.advantage_head.weights.data.data() +
                       static_cast<std::size_t>(r) * advantage_head.weights.cols;
        for (int c = 0; c < advantage_head.weights.cols; ++c) {
            grow[c] += g * h[static_cast<std::size_t>(c)];
            gh[static_cast<std::size_t>(c)] += g * row[c];
        }
        grads.advantage_head.bias[static_cast<std::size_t>(r)] += g;
    }

    // Trunk, last layer first. ReLU gate: output zero means gradient zero.
    for (int l = static_cast<int>(trunk.size()) - 1; l >= 0; --l) {
        const auto& layer = trunk[static_cast<std::size_t>(l)];
        auto& glayer = grads.trunk[static_cast<std::size_t>(l)];
        const auto& input = acts[static_cast<std::size_t>(l)];
        const auto& output = acts[static_cast<std::size_t>(l + 1)];
        std::vector<double> gin(input.size(), 0.0);
        for (int r = 0; r < layer.weights.rows; ++r) {
            if (output[static_cast<std::size_t>(r)] <= 0.0) continue;
            const double g = gh[static_cast<std::size_t>(r)];
            if (g == 0.0) continue;
            const double* row =
                layer.weights.data.data() + static_cast<std::size_t>(r) * layer.weights.cols;
            double* grow =
                glayer.weights.data.data() + static_cast<std::size_t>(r) * layer.weights.cols;
            for (int c = 0; c < layer.weights.cols; ++c) {
                grow[c] += g * input[static_cast<std::size_t>(c)];
                gin[static_cast<std::size_t>(c)] += g * row[c];
            }
            glayer.bias[static_cast<std::size_t>(r)] += g;
        }
        gh.swap(gin);
    }
    return loss;
}

QNetwork QNetwork::zeros_like() const {
    QNetwork z = *this;
    for (auto& layer : z.trunk) {
        std::fill(layer.weights.data.begin(), layer.weights.data.end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
    std::fill(z.value_head.weights.data.begin(), z.value_head.weights.data.end(), 0.0);
    std::fill(z.value_head.bias.begin(), z.value_head.bias.end(), 0.0);
    std::fill(z.advantage_head.weights.data.begin(), z.advantage_head.weights.data.end(), 0.0);
    std::fill(z.advantage_head.bias.begin(), z.advantage_head.bias.end(), 0.0);
    return z;
}

std::vector<double*> QNetwork::parameters() {
    std::vector<double*> out;
    out.reserve(parameter_count());
    for (auto& layer : trunk) collect(out, layer);
    collect(out, value_head);
    collect(out, advantage_head);
    return out;
}

std::vector<const double*> QNetwork::parameters() const {
    auto mut = const_cast<QNetwork*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

std::size_t QNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : trunk) n += layer.weights.data.size() + layer.bias.size();
    n += value_head.weights.data.size() + value_head.bias.size();
    n += advantage_head.weights.data.size() + advantage_head.bias.size();
    return n;
}

void QNetwork::save(std::ostream& out) const {
    out << "bcrn-qnet 1\n";
    out << "input " << input_width_ << "\n";
    out << "hidden";
    for (int w : hidden_widths_) out << ' ' << w;
    out << "\nactions " << num_actions_ << "\n";
    out << "params " << parameter_count() << "\n";
    out << std::setprecision(17);
    for (const double* p : parameters()) out << *p << "\n";
}

QNetwork QNetwork::load(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "bcrn-qnet" || version != 1)
        throw std::runtime_error("unrecognized network file header");
    std::string key;
    int input = 0;
    in >> key >> input;
    if (key != "input") throw std::runtime_error("malformed network file: expected input width");
    in >> key;
    if (key != "hidden") throw std::runtime_error("malformed network file: expected hidden widths");
    std::vector<int> hidden;
    while (in >> std::ws && std::isdigit(in.peek())) {
        int w;
        in >> w;
        hidden.push_back(w);
    }
    int actions = 0;
    in >> key >> actions;
    if (key != "actions") throw std::runtime_error("malformed network file: expected action count");
    std::size_t count = 0;
    in >> key >> count;
    if (key != "params") throw std::runtime_error("malformed network file: expected param count");

    std::mt19937_64 dummy{0};
    QNetwork net = init(input, hidden, actions, dummy);
    if (net.parameter_count() != count)
        throw std::runtime_error("network file parameter count does not match its shape header");
    for (double* p : net.parameters()) {
        if (!(in >> *p)) throw std::runtime_error("network file truncated");
    }
    return net;
}

void QNetwork::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save(out);
    if (!out) throw std::runtime_error("failed writing " + path);
}

QNetwork QNetwork::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load(in);
}

void adam_step(QNetwork& net, const QNetwork& grads, AdamState& opt) {
    if (!net.same_architecture(grads)) throw std::invalid_argument("gradient shape mismatch");
    auto params = net.parameters();
    auto gparams = const_cast<QNetwork&>(grads).parameters();
    if (opt.first_moment.empty()) {
        opt.first_moment.assign(params.size(), 0.0);
        opt.second_moment.assign(params.size(), 0.0);
    }
    if (opt.first_moment.size() != params.size())
        throw std::invalid_argument("optimizer state does not match the network");
    ++opt.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = *gparams[i];
        double& m = opt.first_moment[i];
        double& v = opt.second_moment[i];
        m = opt.beta1 * m + (1.0 - opt.beta1) * g;
        v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        *params[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
}

void sync_target(const QNetwork& online, QNetwork& target) {
    if (!online.same_architecture(target))
        throw std::invalid_argument("cannot sync networks with different architectures");
    target = online;
}

double compare_gradients(const QNetwork& net, std::span<const double> x, int action, double y,
                         const QNetwork& grads, double h, std::size_t full_check_limit,
                         std::uint64_t subsample_seed) {
    if (h <= 0.0) throw std::invalid_argument("finite-difference step must be positive");
    QNetwork probe = net;
    auto params = probe.parameters();
    auto gparams = const_cast<QNetwork&>(grads).parameters();

    std::vector<std::size_t> indices(params.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (params.size() > full_check_limit) {
        std::mt19937_64 rng{subsample_seed};
        std::shuffle(indices.begin(), indices.end(), rng);
        indices.resize(full_check_limit);
    }

    auto loss_at = [&]() {
        const double q = probe.forward(x)[static_cast<std::size_t>(action)];
        return (y - q) * (y - q);
    };

    double max_err = 0.0;
    for (std::size_t i : indices) {
        const double saved = *params[i];
        *params[i] = saved + h;
        const double lp = loss_at();
        *params[i] = saved - h;
        const double lm = loss_at();
        *params[i] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = *gparams[i];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1.0});
        max_err = std::max(max_err, std::abs(numeric - analytic) / denom);
    }
    return max_err;
}

double grad_check(const QNetwork& net, std::span<const double> x, int action, double y,
                  double h, std::size_t full_check_limit, std::uint64_t subsample_seed) {
    QNetwork grads = net.zeros_like();
    net.backward_accumulate(x, action, y, grads);
    return compare_gradients(net, x, action, y, grads, h, full_check_limit, subsample_seed);
}

}  // namespace bcrn
