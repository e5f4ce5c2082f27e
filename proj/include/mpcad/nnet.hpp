#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mpcad/core.hpp"
#include "mpcad/tensor.hpp"

namespace mpcad {

// --- layer kernels ----------------------------------------------------------
//
// All operators are inference-grade and allocation-simple: each returns a
// fresh tensor. Convolution is cross-correlation (no kernel flip) with zero
// padding; output extent per axis is floor((n + 2p - k) / s) + 1.

inline std::vector<int> conv3d_out_shape(const std::vector<int>& in, int out_ch, int k, int s, int p) {
    if (in.size() != 4) throw std::invalid_argument("conv3d expects a (C,D,H,W) tensor, got " + shape_string(in));
    std::vector<int> out(4);
    out[0] = out_ch;
    for (int a = 1; a < 4; ++a) {
        int n = in[a] + 2 * p - k;
        if (n < 0 || k < 1 || s < 1) throw std::invalid_argument("conv3d kernel does not fit input " + shape_string(in));
        out[a] = n / s + 1;
    }
    return out;
}

// w: (O, C, k, k, k); b: (O) or empty for no bias.
inline Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, int stride = 1, int pad = 0) {
    if (w.shape.size() != 5 || w.shape[2] != w.shape[3] || w.shape[3] != w.shape[4])
        throw std::invalid_argument("conv3d weights must be (O,C,k,k,k)");
    if (x.shape.size() != 4 || w.shape[1] != x.shape[0])
        throw std::invalid_argument("conv3d input channels " + shape_string(x.shape) + " do not match weights " +
                                    shape_string(w.shape));
    int O = w.shape[0], C = w.shape[1], k = w.shape[2];
    if (!b.data.empty() && (b.shape.size() != 1 || b.shape[0] != O))
        throw std::invalid_argument("conv3d bias must be (O)");
    Tensor y = Tensor::zeros(conv3d_out_shape(x.shape, O, k, stride, pad));
    int D = x.shape[1], H = x.shape[2], W = x.shape[3];
    int OD = y.shape[1], OH = y.shape[2], OW = y.shape[3];
    const double* xd = x.data.data();
    const double* wd = w.data.data();
    std::int64_t x_c = static_cast<std::int64_t>(D) * H * W;
    std::int64_t w_o = static_cast<std::int64_t>(C) * k * k * k;
    for (int o = 0; o < O; ++o) {
        double bias = b.data.empty() ? 0.0 : b.data[static_cast<std::size_t>(o)];
        for (int od = 0; od < OD; ++od) {
            int dz = od * stride - pad;
            int kz0 = dz < 0 ? -dz : 0, kz1 = std::min(k, D - dz);
            for (int oh = 0; oh < OH; ++oh) {
                int dy = oh * stride - pad;
                int ky0 = dy < 0 ? -dy : 0, ky1 = std::min(k, H - dy);
                for (int ow = 0; ow < OW; ++ow) {
                    int dx = ow * stride - pad;
                    int kx0 = dx < 0 ? -dx : 0, kx1 = std::min(k, W - dx);
                    double acc = bias;
                    for (int c = 0; c < C; ++c) {
                        const double* xc = xd + c * x_c;
                        const double* wc = wd + o * w_o + static_cast<std::int64_t>(c) * k * k * k;
                        for (int kz = kz0; kz < kz1; ++kz) {
                            const double* xz = xc + static_cast<std::int64_t>(dz + kz) * H * W;
                            const double* wz = wc + static_cast<std::int64_t>(kz) * k * k;
                            for (int ky = ky0; ky < ky1; ++ky) {
                                const double* xr = xz + static_cast<std::int64_t>(dy + ky) * W + dx;
                                const double* wr = wz + static_cast<std::int64_t>(ky) * k;
                                for (int kx = kx0; kx < kx1; ++kx) acc += xr[kx] * wr[kx];
                            }
                        }
                    }
                    y.at4(o, od, oh, ow) = acc;
                }
            }
        }
    }
    return y;
}

inline Tensor batchnorm_inference(const Tensor& x, const std::vector<double>& mean, const std::vector<double>& var,
                                  const std::vector<double>& scale, const std::vector<double>& shift,
                                  double eps = 1e-5) {
    if (x.shape.empty()) throw std::invalid_argument("batchnorm input must have a channel axis");
    std::size_t C = static_cast<std::size_t>(x.shape[0]);
    if (mean.size() != C || var.size() != C || scale.size() != C || shift.size() != C)
        throw std::invalid_argument("batchnorm statistics must be per-channel");
    for (double v : var)
        if (v < 0) throw std::invalid_argument("batchnorm variance must be >= 0");
    Tensor y = x;
    std::int64_t per = x.count() / static_cast<std::int64_t>(C);
    for (std::size_t c = 0; c < C; ++c) {
        double inv = 1.0 / std::sqrt(var[c] + eps);
        double a = scale[c] * inv, b = shift[c] - scale[c] * mean[c] * inv;
        double* p = y.data.data() + static_cast<std::int64_t>(c) * per;
        for (std::int64_t i = 0; i < per; ++i) p[i] = a * p[i] + b;
    }
    return y;
}

inline Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0 ? v : 0.0;
    return y;
}

inline Tensor leaky_relu(const Tensor& x, double slope = 0.1) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0 ? v : slope * v;
    return y;
}

inline Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = logistic(v);
    return y;
}

inline std::vector<int> avgpool_out_shape(const std::vector<int>& in, int k, int s) {
    if (in.size() != 4) throw std::invalid_argument("avgpool expects a (C,D,H,W) tensor");
    std::vector<int> out(4);
    out[0] = in[0];
    for (int a = 1; a < 4; ++a) {
        if (in[a] < k) throw std::invalid_argument("avgpool window larger than input " + shape_string(in));
        out[a] = (in[a] - k) / s + 1;
    }
    return out;
}

// Windowed mean, no padding; windows always lie fully inside the input.
inline Tensor avgpool3d(const Tensor& x, int k = 2, int s = 2) {
    Tensor y = Tensor::zeros(avgpool_out_shape(x.shape, k, s));
    double inv = 1.0 / (static_cast<double>(k) * k * k);
    for (int c = 0; c < y.shape[0]; ++c)
        for (int od = 0; od < y.shape[1]; ++od)
            for (int oh = 0; oh < y.shape[2]; ++oh)
                for (int ow = 0; ow < y.shape[3]; ++ow) {
                    double acc = 0;
                    for (int dz = 0; dz < k; ++dz)
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx)
                                acc += x.at4(c, od * s + dz, oh * s + dy, ow * s + dx);
                    y.at4(c, od, oh, ow) = acc * inv;
                }
    return y;
}

// Fully connected layer; the input is flattened implicitly. w: (out, in),
// b: (out) or empty.
inline Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.shape.size() != 2) throw std::invalid_argument("dense weights must be (out, in)");
    if (w.shape[1] != x.count())
        throw std::invalid_argument("dense input size " + std::to_string(x.count()) + " does not match weights " +
                                    shape_string(w.shape));
    int out = w.shape[0];
    if (!b.data.empty() && (b.shape.size() != 1 || b.shape[0] != out))
        throw std::invalid_argument("dense bias must be (out)");
    Tensor y = Tensor::zeros({out});
    for (int i = 0; i < out; ++i) {
        double acc = b.data.empty() ? 0.0 : b.data[static_cast<std::size_t>(i)];
        const double* wr = w.data.data() + static_cast<std::int64_t>(i) * w.shape[1];
        for (std::int64_t j = 0; j < x.count(); ++j) acc += wr[j] * x.data[static_cast<std::size_t>(j)];
        y.data[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

// Channel-axis concatenation of (C,D,H,W) tensors.
inline Tensor concat(const std::vector<const Tensor*>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat needs at least one input");
    for (const Tensor* t : xs)
        if (t->shape.size() != 4) throw std::invalid_argument("concat expects (C,D,H,W) tensors");
    int C = 0;
    for (const Tensor* t : xs) {
        for (int a = 1; a < 4; ++a)
            if (t->shape[a] != xs[0]->shape[a])
                throw std::invalid_argument("concat spatial shapes differ: " + shape_string(t->shape) + " vs " +
                                            shape_string(xs[0]->shape));
        C += t->shape[0];
    }
    Tensor y = Tensor::zeros({C, xs[0]->shape[1], xs[0]->shape[2], xs[0]->shape[3]});
    double* out = y.data.data();
    for (const Tensor* t : xs) {
        std::copy(t->data.begin(), t->data.end(), out);
        out += t->data.size();
    }
    return y;
}

// --- network graph ----------------------------------------------------------

enum class LayerKind { Input, Conv3d, BatchNorm, ReLU, LeakyReLU, AvgPool, Dense, Sigmoid, Concat, Dropout };

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    int out_ch = 0;       // Conv3d
    int kernel = 3;       // Conv3d / AvgPool window
    int stride = 1;       // Conv3d / AvgPool
    int pad = 0;          // Conv3d
    double slope = 0.1;   // LeakyReLU
    int out_features = 0; // Dense
    double rate = 0;      // Dropout (inference no-op, kept as metadata)
    double eps = 1e-5;    // BatchNorm

    static LayerSpec conv3d(int out_ch, int kernel = 3, int stride = 1, int pad = 0) {
        LayerSpec s;
        s.kind = LayerKind::Conv3d;
        s.out_ch = out_ch;
        s.kernel = kernel;
        s.stride = stride;
        s.pad = pad;
        return s;
    }
    static LayerSpec batchnorm(double eps = 1e-5) {
        LayerSpec s;
        s.kind = LayerKind::BatchNorm;
        s.eps = eps;
        return s;
    }
    static LayerSpec relu_() {
        LayerSpec s;
        s.kind = LayerKind::ReLU;
        return s;
    }
    static LayerSpec leaky_relu_(double slope = 0.1) {
        LayerSpec s;
        s.kind = LayerKind::LeakyReLU;
        s.slope = slope;
        return s;
    }
    static LayerSpec avgpool(int kernel = 2, int stride = 2) {
        LayerSpec s;
        s.kind = LayerKind::AvgPool;
        s.kernel = kernel;
        s.stride = stride;
        return s;
    }
    static LayerSpec dense_(int out_features) {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.out_features = out_features;
        return s;
    }
    static LayerSpec sigmoid_() {
        LayerSpec s;
        s.kind = LayerKind::Sigmoid;
        return s;
    }
    static LayerSpec concat_() {
        LayerSpec s;
        s.kind = LayerKind::Concat;
        return s;
    }
    static LayerSpec dropout(double rate) {
        LayerSpec s;
        s.kind = LayerKind::Dropout;
        s.rate = rate;
        return s;
    }
};

struct NetNode {
    std::string name;
    LayerSpec spec;
    std::vector<int> inputs;  // indices of earlier nodes
};

// Weight tensors live in `params`, keyed by node name plus a suffix:
// Conv3d uses <name>.w / <name>.b, Dense the same, BatchNorm uses
// <name>.mean / .var / .scale / .shift. Nodes are stored in insertion order,
// which is a topological order by construction (inputs must already exist).
class Network {
public:
    std::map<std::string, Tensor> params;

    int add_input(const std::string& name) {
        if (!nodes_.empty()) throw std::invalid_argument("input node must be first");
        nodes_.push_back({name, LayerSpec{}, {}});
        nodes_.back().spec.kind = LayerKind::Input;
        output_ = 0;
        return 0;
    }

    int add(const std::string& name, const LayerSpec& spec, std::vector<int> inputs) {
        if (spec.kind == LayerKind::Input) throw std::invalid_argument("use add_input for the input node");
        if (inputs.empty()) throw std::invalid_argument("layer '" + name + "' needs at least one input");
        if (spec.kind != LayerKind::Concat && inputs.size() != 1)
            throw std::invalid_argument("layer '" + name + "' takes exactly one input");
        for (int i : inputs)
            if (i < 0 || i >= static_cast<int>(nodes_.size()))
                throw std::invalid_argument("layer '" + name + "' references an unknown input node");
        nodes_.push_back({name, spec, std::move(inputs)});
        output_ = static_cast<int>(nodes_.size()) - 1;
        return output_;
    }

    void set_output(int node) {
        if (node < 0 || node >= static_cast<int>(nodes_.size())) throw std::invalid_argument("bad output node");
        output_ = node;
    }

    const std::vector<NetNode>& nodes() const { return nodes_; }
    int output() const { return output_; }
    bool empty() const { return nodes_.empty(); }

private:
    std::vector<NetNode> nodes_;
    int output_ = -1;
};

// Output shape of every node for a given input shape.
inline std::vector<std::vector<int>> infer_shapes(const Network& net, const std::vector<int>& input_shape) {
    std::vector<std::vector<int>> shapes;
    shapes.reserve(net.nodes().size());
    for (const NetNode& n : net.nodes()) {
        switch (n.spec.kind) {
            case LayerKind::Input:
                shapes.push_back(input_shape);
                break;
            case LayerKind::Conv3d:
                shapes.push_back(conv3d_out_shape(shapes[static_cast<std::size_t>(n.inputs[0])], n.spec.out_ch,
                                                  n.spec.kernel, n.spec.stride, n.spec.pad));
                break;
            case LayerKind::AvgPool:
                shapes.push_back(avgpool_out_shape(shapes[static_cast<std::size_t>(n.inputs[0])], n.spec.kernel,
                                                   n.spec.stride));
                break;
            case LayerKind::Dense:
                shapes.push_back({n.spec.out_features});
                break;
            case LayerKind::Concat: {
                std::vector<int> s = shapes[static_cast<std::size_t>(n.inputs[0])];
                if (s.size() != 4) throw std::invalid_argument("concat expects (C,D,H,W) inputs");
                for (std::size_t i = 1; i < n.inputs.size(); ++i) {
                    const std::vector<int>& o = shapes[static_cast<std::size_t>(n.inputs[i])];
                    if (o.size() != 4 || o[1] != s[1] || o[2] != s[2] || o[3] != s[3])
                        throw std::invalid_argument("concat shape mismatch at '" + n.name + "'");
                    s[0] += o[0];
                }
                shapes.push_back(s);
                break;
            }
            default:
                shapes.push_back(shapes[static_cast<std::size_t>(n.inputs[0])]);
                break;
        }
    }
    return shapes;
}

// Shapes of every weight tensor the network expects, keyed by param name.
inline std::map<std::string, std::vector<int>> infer_param_shapes(const Network& net,
                                                                  const std::vector<int>& input_shape) {
    std::vector<std::vector<int>> shapes = infer_shapes(net, input_shape);
    std::map<std::string, std::vector<int>> out;
    for (std::size_t i = 0; i < net.nodes().size(); ++i) {
        const NetNode& n = net.nodes()[i];
        if (n.spec.kind == LayerKind::Conv3d) {
            int in_ch = shapes[static_cast<std::size_t>(n.inputs[0])][0];
            out[n.name + ".w"] = {n.spec.out_ch, in_ch, n.spec.kernel, n.spec.kernel, n.spec.kernel};
            out[n.name + ".b"] = {n.spec.out_ch};
        } else if (n.spec.kind == LayerKind::Dense) {
            std::int64_t in = Tensor::count_of(shapes[static_cast<std::size_t>(n.inputs[0])]);
            out[n.name + ".w"] = {n.spec.out_features, static_cast<int>(in)};
            out[n.name + ".b"] = {n.spec.out_features};
        } else if (n.spec.kind == LayerKind::BatchNorm) {
            int ch = shapes[static_cast<std::size_t>(n.inputs[0])][0];
            for (const char* suffix : {".mean", ".var", ".scale", ".shift"}) out[n.name + suffix] = {ch};
        }
    }
    return out;
}

inline std::int64_t param_count(const Network& net, const std::vector<int>& input_shape) {
    std::int64_t n = 0;
    for (const auto& [name, shape] : infer_param_shapes(net, input_shape)) n += Tensor::count_of(shape);
    return n;
}

// Seeded parameter init: he_normal fan-in weights for conv and dense layers,
// zero biases, identity batch-norm (optionally jittered so the statistics
// take part in numeric comparisons). Tensors are created in node order, so a
// given seed always produces the same parameter set.
inline void init_params(Network& net, const std::vector<int>& input_shape, Rng& rng, bool jitter_batchnorm = false) {
    std::vector<std::vector<int>> shapes = infer_shapes(net, input_shape);
    for (std::size_t i = 0; i < net.nodes().size(); ++i) {
        const NetNode& n = net.nodes()[i];
        if (n.spec.kind == LayerKind::Conv3d || n.spec.kind == LayerKind::Dense) {
            std::vector<int> wshape;
            std::int64_t fan_in = 0;
            if (n.spec.kind == LayerKind::Conv3d) {
                int in_ch = shapes[static_cast<std::size_t>(n.inputs[0])][0];
                int k = n.spec.kernel;
                wshape = {n.spec.out_ch, in_ch, k, k, k};
                fan_in = static_cast<std::int64_t>(in_ch) * k * k * k;
            } else {
                std::int64_t in = Tensor::count_of(shapes[static_cast<std::size_t>(n.inputs[0])]);
                wshape = {n.spec.out_features, static_cast<int>(in)};
                fan_in = in;
            }
            Tensor w = Tensor::zeros(wshape);
            double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (double& v : w.data) v = rng.gaussian(0.0, sd);
            net.params[n.name + ".w"] = std::move(w);
            net.params[n.name + ".b"] = Tensor::zeros({wshape[0]});
        } else if (n.spec.kind == LayerKind::BatchNorm) {
            int ch = shapes[static_cast<std::size_t>(n.inputs[0])][0];
            Tensor mean = Tensor::zeros({ch}), var = Tensor::zeros({ch});
            Tensor scale = Tensor::zeros({ch}), shift = Tensor::zeros({ch});
            for (int c = 0; c < ch; ++c) {
                var.data[static_cast<std::size_t>(c)] = 1.0;
                scale.data[static_cast<std::size_t>(c)] = 1.0;
                if (jitter_batchnorm) {
                    mean.data[static_cast<std::size_t>(c)] = rng.gaussian(0.0, 0.1);
                    var.data[static_cast<std::size_t>(c)] = 1.0 + std::fabs(rng.gaussian(0.0, 0.1));
                    scale.data[static_cast<std::size_t>(c)] = 1.0 + rng.gaussian(0.0, 0.1);
                    shift.data[static_cast<std::size_t>(c)] = rng.gaussian(0.0, 0.1);
                }
            }
            net.params[n.name + ".mean"] = std::move(mean);
            net.params[n.name + ".var"] = std::move(var);
            net.params[n.name + ".scale"] = std::move(scale);
            net.params[n.name + ".shift"] = std::move(shift);
        }
    }
}

namespace detail {

inline const Tensor& require_param(const Network& net, const std::string& name) {
    auto it = net.params.find(name);
    if (it == net.params.end()) throw std::invalid_argument("unbound weight tensor '" + name + "'");
    return it->second;
}

inline std::vector<double> param_vector(const Network& net, const std::string& name) {
    return require_param(net, name).data;
}

}  // namespace detail

// Optimized executor: evaluates nodes in order, dropping intermediate values
// once their last consumer has run. An empty network is the identity.
inline Tensor forward(const Network& net, const Tensor& x) {
    if (net.empty()) return x;
    if (net.nodes()[0].spec.kind != LayerKind::Input) throw std::invalid_argument("network has no input node");
    std::size_t n = net.nodes().size();
    std::vector<int> remaining(n, 0);
    for (const NetNode& node : net.nodes())
        for (int i : node.inputs) ++remaining[static_cast<std::size_t>(i)];
    remaining[static_cast<std::size_t>(net.output())] += 1;

    std::vector<Tensor> values(n);
    values[0] = x;
    for (std::size_t i = 1; i < n; ++i) {
        const NetNode& node = net.nodes()[i];
        const Tensor& in0 = values[static_cast<std::size_t>(node.inputs[0])];
        switch (node.spec.kind) {
            case LayerKind::Conv3d:
                values[i] = conv3d(in0, detail::require_param(net, node.name + ".w"),
                                   detail::require_param(net, node.name + ".b"), node.spec.stride, node.spec.pad);
                break;
            case LayerKind::BatchNorm:
                values[i] = batchnorm_inference(in0, detail::param_vector(net, node.name + ".mean"),
                                                detail::param_vector(net, node.name + ".var"),
                                                detail::param_vector(net, node.name + ".scale"),
                                                detail::param_vector(net, node.name + ".shift"), node.spec.eps);
                break;
            case LayerKind::ReLU: values[i] = relu(in0); break;
            case LayerKind::LeakyReLU: values[i] = leaky_relu(in0, node.spec.slope); break;
            case LayerKind::AvgPool: values[i] = avgpool3d(in0, node.spec.kernel, node.spec.stride); break;
            case LayerKind::Dense:
                values[i] = dense(in0, detail::require_param(net, node.name + ".w"),
                                  detail::require_param(net, node.name + ".b"));
                break;
            case LayerKind::Sigmoid: values[i] = sigmoid(in0); break;
            case LayerKind::Dropout: values[i] = in0; break;
            case LayerKind::Concat: {
                std::vector<const Tensor*> ins;
                ins.reserve(node.inputs.size());
                for (int j : node.inputs) ins.push_back(&values[static_cast<std::size_t>(j)]);
                values[i] = concat(ins);
                break;
            }
            case LayerKind::Input: throw std::invalid_argument("unexpected second input node");
        }
        for (int j : node.inputs) {
            if (--remaining[static_cast<std::size_t>(j)] == 0) {
                values[static_cast<std::size_t>(j)].data.clear();
                values[static_cast<std::size_t>(j)].data.shrink_to_fit();
            }
        }
    }
    return values[static_cast<std::size_t>(net.output())];
}

}  // namespace mpcad
