#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctlearn/core.hpp"
#include "ctlearn/projector.hpp"

namespace ctlearn::ad {

// Define-by-run reverse-mode tape over dense tensors. The tape is rebuilt
// for every forward pass; nodes are appended in evaluation order and the
// backward sweep visits them exactly once in reverse. Only the operations
// the unrolled networks need are provided.

template <typename T>
class Tape;

template <typename T>
class Var {
  public:
    Var() = default;
    bool valid() const { return tape_ != nullptr; }
    int id() const { return id_; }
    const Shape& shape() const { return tape_->shape(id_); }
    std::span<const T> value() const { return tape_->value(id_); }
    std::span<const T> grad() const { return tape_->grad(id_); }

  private:
    friend class Tape<T>;
    Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}
    Tape<T>* tape_ = nullptr;
    int id_ = -1;
};

template <typename T>
class Tape {
  public:
    Var<T> input(Shape shape, std::vector<T> data) {
        if (data.size() != numel(shape)) throw std::invalid_argument("tape input: data/shape mismatch");
        return make_node(std::move(shape), std::move(data), {});
    }

    Var<T> input(const NdArray<T>& array) {
        return make_node(array.shape(), array.vec(), {});
    }

    Var<T> zeros(Shape shape) {
        std::vector<T> data(numel(shape), T(0));
        return make_node(std::move(shape), std::move(data), {});
    }

    // 3x3 convolution with one-pixel zero padding, cross-correlation
    // convention (no kernel flip). The input gradient is therefore the full
    // correlation with the kernel flipped in both spatial axes; it is
    // realized below by index-shifted accumulation.
    Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b) {
        const Shape& xs = shape(x.id_);
        const Shape& ws = shape(w.id_);
        const Shape& bs = shape(b.id_);
        if (xs.size() != 4) throw std::invalid_argument("conv2d: input must be [N, C, H, W]");
        if (ws.size() != 4 || ws[2] != 3 || ws[3] != 3)
            throw std::invalid_argument("conv2d: weights must be [O, C, 3, 3]");
        if (ws[1] != xs[1])
            throw std::invalid_argument("conv2d: weight input channels " + std::to_string(ws[1]) +
                                        " do not match input channels " + std::to_string(xs[1]));
        if (bs.size() != 1 || bs[0] != ws[0])
            throw std::invalid_argument("conv2d: bias must have one entry per output channel");
        const int N = xs[0], C = xs[1], H = xs[2], W = xs[3], O = ws[0];
        std::vector<T> out(static_cast<std::size_t>(N) * O * H * W);
        conv2d_forward(value(x.id_).data(), value(w.id_).data(), value(b.id_).data(), out.data(), N,
                       C, H, W, O);
        const int xi = x.id_, wi = w.id_, bi = b.id_;
        return make_node({N, O, H, W}, std::move(out), [this, xi, wi, bi, N, C, H, W, O](int self) {
            conv2d_backward(nodes_[self].grad.data(), value(xi).data(), value(wi).data(),
                            nodes_[xi].grad.data(), nodes_[wi].grad.data(), nodes_[bi].grad.data(), N,
                            C, H, W, O);
        });
    }

    // PReLU as written: x for x >= 0 and -c_j * x otherwise, with one
    // coefficient per channel.
    Var<T> prelu(Var<T> x, Var<T> c) {
        const Shape& xs = shape(x.id_);
        const Shape& cs = shape(c.id_);
        if (xs.size() != 4) throw std::invalid_argument("prelu: input must be [N, C, H, W]");
        if (cs.size() != 1 || cs[0] != xs[1])
            throw std::invalid_argument("prelu: coefficients must have one entry per channel");
        const int N = xs[0], C = xs[1];
        const std::size_t plane = static_cast<std::size_t>(xs[2]) * xs[3];
        std::vector<T> out(value(x.id_).size());
        {
            const T* in = value(x.id_).data();
            const T* cv = value(c.id_).data();
            std::size_t i = 0;
            for (int n = 0; n < N; ++n) {
                for (int ch = 0; ch < C; ++ch) {
                    const T coeff = cv[ch];
                    for (std::size_t p = 0; p < plane; ++p, ++i)
                        out[i] = in[i] >= T(0) ? in[i] : -coeff * in[i];
                }
            }
        }
        const int xi = x.id_, ci = c.id_;
        return make_node(xs, std::move(out), [this, xi, ci, N, C, plane](int self) {
            const T* in = value(xi).data();
            const T* cv = value(ci).data();
            const T* go = nodes_[self].grad.data();
            T* gx = nodes_[xi].grad.data();
            T* gc = nodes_[ci].grad.data();
            std::size_t i = 0;
            for (int n = 0; n < N; ++n) {
                for (int ch = 0; ch < C; ++ch) {
                    const T coeff = cv[ch];
                    double acc = 0.0;
                    for (std::size_t p = 0; p < plane; ++p, ++i) {
                        if (in[i] >= T(0)) {
                            gx[i] += go[i];
                        } else {
                            gx[i] += -coeff * go[i];
                            acc -= static_cast<double>(in[i]) * static_cast<double>(go[i]);
                        }
                    }
                    gc[ch] += static_cast<T>(acc);
                }
            }
        });
    }

    Var<T> concat_channels(const std::vector<Var<T>>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat_channels: empty part list");
        const Shape& first = shape(parts[0].id_);
        if (first.size() != 4) throw std::invalid_argument("concat_channels: parts must be [N, C, H, W]");
        int channels = 0;
        for (const auto& p : parts) {
            const Shape& ps = shape(p.id_);
            if (ps.size() != 4 || ps[0] != first[0] || ps[2] != first[2] || ps[3] != first[3])
                throw std::invalid_argument("concat_channels: spatial shape mismatch");
            channels += ps[1];
        }
        const int N = first[0], H = first[2], W = first[3];
        const std::size_t plane = static_cast<std::size_t>(H) * W;
        std::vector<T> out(static_cast<std::size_t>(N) * channels * plane);
        std::vector<int> ids(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) ids[i] = parts[i].id_;
        {
            std::size_t ch_off = 0;
            for (int id : ids) {
                const int pc = shape(id)[1];
                const T* src = value(id).data();
                for (int n = 0; n < N; ++n) {
                    T* dst = out.data() + (static_cast<std::size_t>(n) * channels + ch_off) * plane;
                    std::copy(src + static_cast<std::size_t>(n) * pc * plane,
                              src + static_cast<std::size_t>(n + 1) * pc * plane, dst);
                }
                ch_off += pc;
            }
        }
        return make_node({N, channels, H, W}, std::move(out),
                         [this, ids, N, channels, plane](int self) {
                             const T* go = nodes_[self].grad.data();
                             std::size_t ch_off = 0;
                             for (int id : ids) {
                                 const int pc = shape(id)[1];
                                 T* dst = nodes_[id].grad.data();
                                 for (int n = 0; n < N; ++n) {
                                     const T* src =
                                         go + (static_cast<std::size_t>(n) * channels + ch_off) * plane;
                                     T* d = dst + static_cast<std::size_t>(n) * pc * plane;
                                     for (std::size_t i = 0; i < pc * plane; ++i) d[i] += src[i];
                                 }
                                 ch_off += pc;
                             }
                         });
    }

    Var<T> slice_channels(Var<T> x, int begin, int count) {
        const Shape& xs = shape(x.id_);
        if (xs.size() != 4) throw std::invalid_argument("slice_channels: input must be [N, C, H, W]");
        if (begin < 0 || count <= 0 || begin + count > xs[1])
            throw std::invalid_argument("slice_channels: channel range out of bounds");
        const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
        const std::size_t plane = static_cast<std::size_t>(H) * W;
        std::vector<T> out(static_cast<std::size_t>(N) * count * plane);
        const T* src = value(x.id_).data();
        for (int n = 0; n < N; ++n)
            std::copy(src + (static_cast<std::size_t>(n) * C + begin) * plane,
                      src + (static_cast<std::size_t>(n) * C + begin + count) * plane,
                      out.data() + static_cast<std::size_t>(n) * count * plane);
        const int xi = x.id_;
        return make_node({N, count, H, W}, std::move(out),
                         [this, xi, begin, count, N, C, plane](int self) {
                             const T* go = nodes_[self].grad.data();
                             T* gx = nodes_[xi].grad.data();
                             for (int n = 0; n < N; ++n) {
                                 T* dst = gx + (static_cast<std::size_t>(n) * C + begin) * plane;
                                 const T* src2 = go + static_cast<std::size_t>(n) * count * plane;
                                 for (std::size_t i = 0; i < count * plane; ++i) dst[i] += src2[i];
                             }
                         });
    }

    Var<T> add(Var<T> a, Var<T> b) { return binary(a, b, /*sign=*/T(1)); }
    Var<T> sub(Var<T> a, Var<T> b) { return binary(a, b, /*sign=*/T(-1)); }

    Var<T> scale(Var<T> a, T alpha) {
        std::vector<T> out(value(a.id_).begin(), value(a.id_).end());
        for (auto& v : out) v *= alpha;
        const int ai = a.id_;
        return make_node(shape(a.id_), std::move(out), [this, ai, alpha](int self) {
            const T* go = nodes_[self].grad.data();
            T* ga = nodes_[ai].grad.data();
            for (std::size_t i = 0; i < nodes_[self].grad.size(); ++i) ga[i] += alpha * go[i];
        });
    }

    Var<T> mul(Var<T> a, Var<T> b) {
        if (shape(a.id_) != shape(b.id_)) throw std::invalid_argument("mul: shape mismatch");
        std::span<const T> av = value(a.id_), bv = value(b.id_);
        std::vector<T> out(av.size());
        for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
        const int ai = a.id_, bi = b.id_;
        return make_node(shape(a.id_), std::move(out), [this, ai, bi](int self) {
            const T* go = nodes_[self].grad.data();
            const T* av2 = value(ai).data();
            const T* bv2 = value(bi).data();
            T* ga = nodes_[ai].grad.data();
            T* gb = nodes_[bi].grad.data();
            for (std::size_t i = 0; i < nodes_[self].grad.size(); ++i) {
                ga[i] += bv2[i] * go[i];
                gb[i] += av2[i] * go[i];
            }
        });
    }

    // Multiply a tensor by a trainable scalar (shape {1}).
    Var<T> scale_by(Var<T> x, Var<T> s) {
        if (numel(shape(s.id_)) != 1) throw std::invalid_argument("scale_by: scalar must have one entry");
        const T sv = value(s.id_)[0];
        std::vector<T> out(value(x.id_).begin(), value(x.id_).end());
        for (auto& v : out) v *= sv;
        const int xi = x.id_, si = s.id_;
        return make_node(shape(x.id_), std::move(out), [this, xi, si](int self) {
            const T* go = nodes_[self].grad.data();
            const T* xv = value(xi).data();
            const T sv2 = value(si)[0];
            T* gx = nodes_[xi].grad.data();
            double acc = 0.0;
            for (std::size_t i = 0; i < nodes_[self].grad.size(); ++i) {
                gx[i] += sv2 * go[i];
                acc += static_cast<double>(xv[i]) * static_cast<double>(go[i]);
            }
            nodes_[si].grad[0] += static_cast<T>(acc);
        });
    }

    Var<T> sum_squares(Var<T> a) {
        std::span<const T> av = value(a.id_);
        double acc = 0.0;
        for (const T& v : av) acc += static_cast<double>(v) * static_cast<double>(v);
        const int ai = a.id_;
        return make_node({1}, {static_cast<T>(acc)}, [this, ai](int self) {
            const T go = nodes_[self].grad[0];
            const T* av2 = value(ai).data();
            T* ga = nodes_[ai].grad.data();
            for (std::size_t i = 0; i < nodes_[ai].grad.size(); ++i) ga[i] += T(2) * av2[i] * go;
        });
    }

    Var<T> apply_linear(const LinearOperator<T>& op, Var<T> x) {
        Shape out_shape = operator_output_shape(shape(x.id_), op.domain, op.range, op.name);
        const std::size_t dn = numel(op.domain), rn = numel(op.range);
        const std::size_t batch = numel(shape(x.id_)) / dn;
        std::vector<T> out(batch * rn);
        std::span<const T> xv = value(x.id_);
        for (std::size_t i = 0; i < batch; ++i)
            op.apply(xv.subspan(i * dn, dn), std::span<T>(out).subspan(i * rn, rn));
        const int xi = x.id_;
        LinearOperator<T> held = op;
        return make_node(std::move(out_shape), std::move(out),
                         [this, xi, held, batch, dn, rn](int self) {
                             std::vector<T> tmp(dn);
                             const T* go = nodes_[self].grad.data();
                             T* gx = nodes_[xi].grad.data();
                             for (std::size_t i = 0; i < batch; ++i) {
                                 held.apply_adjoint(std::span<const T>(go + i * rn, rn),
                                                    std::span<T>(tmp));
                                 for (std::size_t k = 0; k < dn; ++k) gx[i * dn + k] += tmp[k];
                             }
                         });
    }

    Var<T> apply_nonlinear(const NonlinearOperator<T>& op, Var<T> x) {
        Shape out_shape = operator_output_shape(shape(x.id_), op.domain, op.range, op.name);
        const std::size_t dn = numel(op.domain), rn = numel(op.range);
        const std::size_t batch = numel(shape(x.id_)) / dn;
        std::vector<T> out(batch * rn);
        std::span<const T> xv = value(x.id_);
        for (std::size_t i = 0; i < batch; ++i)
            op.apply(xv.subspan(i * dn, dn), std::span<T>(out).subspan(i * rn, rn));
        const int xi = x.id_;
        NonlinearOperator<T> held = op;
        return make_node(std::move(out_shape), std::move(out),
                         [this, xi, held, batch, dn, rn](int self) {
                             std::vector<T> tmp(dn);
                             const T* go = nodes_[self].grad.data();
                             const T* point = value(xi).data();
                             T* gx = nodes_[xi].grad.data();
                             for (std::size_t i = 0; i < batch; ++i) {
                                 held.derivative_adjoint(std::span<const T>(point + i * dn, dn),
                                                         std::span<const T>(go + i * rn, rn),
                                                         std::span<T>(tmp));
                                 for (std::size_t k = 0; k < dn; ++k) gx[i * dn + k] += tmp[k];
                             }
                         });
    }

    // Seeds the scalar root with gradient one and sweeps the tape in
    // reverse creation order. Running it twice on one tape is an error.
    void backward(Var<T> root) {
        if (root.tape_ != this) throw std::logic_error("backward: variable from another tape");
        if (backward_done_) throw std::logic_error("backward: tape already swept; rebuild the graph");
        if (numel(shape(root.id_)) != 1) throw std::invalid_argument("backward: root must be scalar");
        backward_done_ = true;
        nodes_[root.id_].grad[0] = T(1);
        for (int i = root.id_; i >= 0; --i)
            if (nodes_[i].backward) nodes_[i].backward(i);
    }

    bool backward_done() const { return backward_done_; }
    std::size_t num_nodes() const { return nodes_.size(); }

    const Shape& shape(int id) const { return nodes_.at(id).shape; }
    std::span<const T> value(int id) const { return nodes_.at(id).value; }
    std::span<const T> grad(int id) const { return nodes_.at(id).grad; }

  private:
    struct Node {
        Shape shape;
        std::vector<T> value;
        std::vector<T> grad;
        std::function<void(int)> backward;
    };

    Var<T> make_node(Shape shape, std::vector<T> value, std::function<void(int)> backward) {
        Node node;
        node.shape = std::move(shape);
        node.grad.assign(value.size(), T(0));
        node.value = std::move(value);
        node.backward = std::move(backward);
        nodes_.push_back(std::move(node));
        return Var<T>(this, static_cast<int>(nodes_.size() - 1));
    }

    Var<T> binary(Var<T> a, Var<T> b, T sign) {
        if (shape(a.id_) != shape(b.id_))
            throw std::invalid_argument("add/sub: shape mismatch " + shape_str(shape(a.id_)) + " vs " +
                                        shape_str(shape(b.id_)));
        std::span<const T> av = value(a.id_), bv = value(b.id_);
        std::vector<T> out(av.size());
        for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + sign * bv[i];
        const int ai = a.id_, bi = b.id_;
        return make_node(shape(a.id_), std::move(out), [this, ai, bi, sign](int self) {
            const T* go = nodes_[self].grad.data();
            T* ga = nodes_[ai].grad.data();
            T* gb = nodes_[bi].grad.data();
            for (std::size_t i = 0; i < nodes_[self].grad.size(); ++i) {
                ga[i] += go[i];
                gb[i] += sign * go[i];
            }
        });
    }

    static Shape operator_output_shape(const Shape& input, const Shape& domain, const Shape& range,
                                       const std::string& name) {
        if (input.size() < domain.size())
            throw std::invalid_argument(name + ": input rank too small for operator domain");
        const std::size_t lead = input.size() - domain.size();
        for (std::size_t i = 0; i < domain.size(); ++i)
            if (input[lead + i] != domain[i])
                throw std::invalid_argument(name + ": input shape " + shape_str(input) +
                                            " does not end with operator domain " + shape_str(domain));
        Shape out(input.begin(), input.begin() + lead);
        out.insert(out.end(), range.begin(), range.end());
        return out;
    }

    static void conv2d_forward(const T* in, const T* w, const T* b, T* out, int N, int C, int H,
                               int W, int O) {
        const std::size_t plane = static_cast<std::size_t>(H) * W;
        for (int n = 0; n < N; ++n) {
            const T* inn = in + static_cast<std::size_t>(n) * C * plane;
            T* outn = out + static_cast<std::size_t>(n) * O * plane;
            for (int o = 0; o < O; ++o) {
                T* op = outn + static_cast<std::size_t>(o) * plane;
                std::fill(op, op + plane, b[o]);
                for (int c = 0; c < C; ++c) {
                    const T* ip = inn + static_cast<std::size_t>(c) * plane;
                    const T* wp = w + (static_cast<std::size_t>(o) * C + c) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int dy = ky - 1;
                        const int ylo = std::max(0, -dy);
                        const int yhi = std::min(H, H - dy);
                        for (int kx = 0; kx < 3; ++kx) {
                            const int dx = kx - 1;
                            const T wv = wp[ky * 3 + kx];
                            const int xlo = std::max(0, -dx);
                            const int xhi = std::min(W, W - dx);
                            for (int y = ylo; y < yhi; ++y) {
                                T* orow = op + static_cast<std::size_t>(y) * W;
                                const T* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
                                for (int x = xlo; x < xhi; ++x) orow[x] += wv * irow[x];
                            }
                        }
                    }
                }
            }
        }
    }

    static void conv2d_backward(const T* gout, const T* in, const T* w, T* gin, T* gw, T* gb, int N,
                                int C, int H, int W, int O) {
        const std::size_t plane = static_cast<std::size_t>(H) * W;
        for (int n = 0; n < N; ++n) {
            const T* inn = in + static_cast<std::size_t>(n) * C * plane;
            const T* gon = gout + static_cast<std::size_t>(n) * O * plane;
            T* ginn = gin + static_cast<std::size_t>(n) * C * plane;
            for (int o = 0; o < O; ++o) {
                const T* gop = gon + static_cast<std::size_t>(o) * plane;
                double bacc = 0.0;
                for (std::size_t i = 0; i < plane; ++i) bacc += static_cast<double>(gop[i]);
                gb[o] += static_cast<T>(bacc);
                for (int c = 0; c < C; ++c) {
                    const T* ip = inn + static_cast<std::size_t>(c) * plane;
                    T* gip = ginn + static_cast<std::size_t>(c) * plane;
                    const T* wp = w + (static_cast<std::size_t>(o) * C + c) * 9;
                    T* gwp = gw + (static_cast<std::size_t>(o) * C + c) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int dy = ky - 1;
                        const int ylo = std::max(0, -dy);
                        const int yhi = std::min(H, H - dy);
                        for (int kx = 0; kx < 3; ++kx) {
                            const int dx = kx - 1;
                            const T wv = wp[ky * 3 + kx];
                            const int xlo = std::max(0, -dx);
                            const int xhi = std::min(W, W - dx);
                            double wacc = 0.0;
                            for (int y = ylo; y < yhi; ++y) {
                                const T* gorow = gop + static_cast<std::size_t>(y) * W;
                                const T* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
                                T* girow = gip + static_cast<std::size_t>(y + dy) * W + dx;
                                for (int x = xlo; x < xhi; ++x) {
                                    girow[x] += wv * gorow[x];
                                    wacc += static_cast<double>(irow[x]) * static_cast<double>(gorow[x]);
                                }
                            }
                            gwp[ky * 3 + kx] += static_cast<T>(wacc);
                        }
                    }
                }
            }
        }
    }

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace ctlearn::ad
