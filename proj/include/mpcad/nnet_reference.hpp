#pragma once

#include <cmath>

#include "mpcad/nnet.hpp"

namespace mpcad {
namespace refexec {

// Slow correctness oracle for the optimized executor. Every kernel here is a
// plain quadruple-nested scalar loop over logical indices with explicit
// bounds checks, deliberately sharing no arithmetic shortcuts (pointer
// striding, folded batch-norm coefficients, clipped kernel ranges) with the
// fast path.

inline Tensor conv3d_naive(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    int O = w.shape[0], C = w.shape[1], k = w.shape[2];
    if (x.shape.size() != 4 || x.shape[0] != C) throw std::invalid_argument("conv3d input/weight mismatch");
    Tensor y = Tensor::zeros(conv3d_out_shape(x.shape, O, k, stride, pad));
    for (int o = 0; o < O; ++o) {
        for (int od = 0; od < y.shape[1]; ++od) {
            for (int oh = 0; oh < y.shape[2]; ++oh) {
                for (int ow = 0; ow < y.shape[3]; ++ow) {
                    double acc = b.data.empty() ? 0.0 : b.data[static_cast<std::size_t>(o)];
                    for (int kz = 0; kz < k; ++kz) {
                        for (int ky = 0; ky < k; ++ky) {
                            for (int kx = 0; kx < k; ++kx) {
                                int z = od * stride - pad + kz;
                                int yy = oh * stride - pad + ky;
                                int xx = ow * stride - pad + kx;
                                if (z < 0 || z >= x.shape[1] || yy < 0 || yy >= x.shape[2] || xx < 0 ||
                                    xx >= x.shape[3])
                                    continue;
                                for (int c = 0; c < C; ++c) {
                                    double wv =
                                        w.data[static_cast<std::size_t>((((static_cast<std::int64_t>(o) * C + c) * k + kz) * k + ky) * k + kx)];
                                    acc += x.at4(c, z, yy, xx) * wv;
                                }
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

inline Tensor batchnorm_naive(const Tensor& x, const std::vector<double>& mean, const std::vector<double>& var,
                              const std::vector<double>& scale, const std::vector<double>& shift, double eps) {
    Tensor y = x;
    std::size_t C = static_cast<std::size_t>(x.shape[0]);
    std::int64_t per = x.count() / static_cast<std::int64_t>(C);
    for (std::int64_t i = 0; i < x.count(); ++i) {
        std::size_t c = static_cast<std::size_t>(i / per);
        y.data[static_cast<std::size_t>(i)] =
            scale[c] * (x.data[static_cast<std::size_t>(i)] - mean[c]) / std::sqrt(var[c] + eps) + shift[c];
    }
    return y;
}

inline Tensor avgpool_naive(const Tensor& x, int k, int s) {
    Tensor y = Tensor::zeros(avgpool_out_shape(x.shape, k, s));
    for (int c = 0; c < y.shape[0]; ++c)
        for (int od = 0; od < y.shape[1]; ++od)
            for (int oh = 0; oh < y.shape[2]; ++oh)
                for (int ow = 0; ow < y.shape[3]; ++ow) {
                    double acc = 0;
                    int cnt = 0;
                    for (int dz = 0; dz < k; ++dz)
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx) {
                                acc += x.at4(c, od * s + dz, oh * s + dy, ow * s + dx);
                                ++cnt;
                            }
                    y.at4(c, od, oh, ow) = acc / cnt;
                }
    return y;
}

inline Tensor dense_naive(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y = Tensor::zeros({w.shape[0]});
    for (int i = 0; i < w.shape[0]; ++i) {
        double acc = 0;
        for (std::int64_t j = x.count() - 1; j >= 0; --j)  // reversed order on purpose
            acc += w.data[static_cast<std::size_t>(static_cast<std::int64_t>(i) * w.shape[1] + j)] *
                   x.data[static_cast<std::size_t>(j)];
        if (!b.data.empty()) acc += b.data[static_cast<std::size_t>(i)];
        y.data[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

}  // namespace refexec

// Reference forward pass: same graph walk, independent scalar kernels. Keeps
// every intermediate alive (no memory reclamation), so use it on small nets.
inline Tensor reference_forward(const Network& net, const Tensor& x) {
    if (net.empty()) return x;
    if (net.nodes()[0].spec.kind != LayerKind::Input) throw std::invalid_argument("network has no input node");
    std::vector<Tensor> values(net.nodes().size());
    values[0] = x;
    for (std::size_t i = 1; i < net.nodes().size(); ++i) {
        const NetNode& node = net.nodes()[i];
        const Tensor& in0 = values[static_cast<std::size_t>(node.inputs[0])];
        switch (node.spec.kind) {
            case LayerKind::Conv3d:
                values[i] = refexec::conv3d_naive(in0, detail::require_param(net, node.name + ".w"),
                                                  detail::require_param(net, node.name + ".b"), node.spec.stride,
                                                  node.spec.pad);
                break;
            case LayerKind::BatchNorm:
                values[i] = refexec::batchnorm_naive(in0, detail::param_vector(net, node.name + ".mean"),
                                                     detail::param_vector(net, node.name + ".var"),
                                                     detail::param_vector(net, node.name + ".scale"),
                                                     detail::param_vector(net, node.name + ".shift"), node.spec.eps);
                break;
            case LayerKind::ReLU: {
                Tensor y = in0;
                for (std::size_t j = 0; j < y.data.size(); ++j)
                    if (y.data[j] < 0) y.data[j] = 0;
                values[i] = y;
                break;
            }
            case LayerKind::LeakyReLU: {
                Tensor y = in0;
                for (std::size_t j = 0; j < y.data.size(); ++j)
                    if (y.data[j] < 0) y.data[j] = node.spec.slope * y.data[j];
                values[i] = y;
                break;
            }
            case LayerKind::AvgPool: values[i] = refexec::avgpool_naive(in0, node.spec.kernel, node.spec.stride); break;
            case LayerKind::Dense:
                values[i] = refexec::dense_naive(in0, detail::require_param(net, node.name + ".w"),
                                                 detail::require_param(net, node.name + ".b"));
                break;
            case LayerKind::Sigmoid: {
                Tensor y = in0;
                for (std::size_t j = 0; j < y.data.size(); ++j) y.data[j] = 1.0 / (1.0 + std::exp(-y.data[j]));
                values[i] = y;
                break;
            }
            case LayerKind::Dropout: values[i] = in0; break;
            case LayerKind::Concat: {
                std::vector<const Tensor*> ins;
                for (int j : node.inputs) ins.push_back(&values[static_cast<std::size_t>(j)]);
                values[i] = concat(ins);
                break;
            }
            case LayerKind::Input: throw std::invalid_argument("unexpected second input node");
        }
    }
    return values[static_cast<std::size_t>(net.output())];
}

}  // namespace mpcad
