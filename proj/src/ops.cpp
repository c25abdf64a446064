#include "acube/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acube {

namespace {

using autograd::Node;

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
    Shape out;
    for (int i = 0; i < 4; ++i) {
        int64_t ea = a[i], eb = b[i];
        int64_t e;
        if (ea == eb)
            e = ea;
        else if (ea == 1)
            e = eb;
        else if (eb == 1)
            e = ea;
        else
            throw std::invalid_argument(std::string(op) + ": shapes " + a.str() + " and " +
                                        b.str() + " do not broadcast");
        (i == 0 ? out.b : i == 1 ? out.c : i == 2 ? out.h : out.w) = e;
    }
    return out;
}

struct Strides {
    int64_t b, c, h, w;
};

// strides of `s` when indexed with coordinates of `out` (0 on broadcast axes)
Strides bcast_strides(const Shape& s, const Shape& out) {
    Strides st{s.c * s.h * s.w, s.h * s.w, s.w, 1};
    if (s.b != out.b) st.b = 0;
    if (s.c != out.c) st.c = 0;
    if (s.h != out.h) st.h = 0;
    if (s.w != out.w) st.w = 0;
    return st;
}

// Accumulates a gradient of shape `gs` into a parent node of a (possibly
// broadcast) smaller shape.
void accum_reduced(const std::vector<double>& g, const Shape& gs, Node& parent) {
    parent.ensure_grad();
    if (parent.shape == gs) {
        for (size_t i = 0; i < g.size(); ++i) parent.grad[i] += g[i];
        return;
    }
    Strides st = bcast_strides(parent.shape, gs);
    size_t i = 0;
    for (int64_t b = 0; b < gs.b; ++b)
        for (int64_t c = 0; c < gs.c; ++c)
            for (int64_t y = 0; y < gs.h; ++y)
                for (int64_t x = 0; x < gs.w; ++x, ++i)
                    parent.grad[static_cast<size_t>(b * st.b + c * st.c + y * st.h + x * st.w)] += g[i];
}

Tensor make_output(Shape s, std::vector<double> data, std::vector<const Tensor*> inputs,
                   std::function<void(Node&)> bp) {
    Tensor out(s, std::move(data));
    if (!autograd::enabled()) return out;
    bool any = false;
    for (const Tensor* t : inputs)
        if (t->node_) any = true;
    if (!any) return out;
    auto node = std::make_shared<Node>();
    node->shape = s;
    for (const Tensor* t : inputs)
        if (t->node_) node->parents.push_back(t->node_);
    node->backprop = std::move(bp);
    out.node_ = node;
    return out;
}

enum class BinOp { add, sub, mul };

Tensor binary(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
    Shape os = broadcast_shape(a.shape(), b.shape(), name);
    std::vector<double> out(static_cast<size_t>(os.numel()));
    const double* pa = a.data();
    const double* pb = b.data();
    if (a.shape() == os && b.shape() == os) {
        switch (op) {
            case BinOp::add:
                for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
                break;
            case BinOp::sub:
                for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] - pb[i];
                break;
            case BinOp::mul:
                for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
                break;
        }
    } else {
        Strides sa = bcast_strides(a.shape(), os);
        Strides sb = bcast_strides(b.shape(), os);
        size_t i = 0;
        for (int64_t bb = 0; bb < os.b; ++bb)
            for (int64_t c = 0; c < os.c; ++c)
                for (int64_t y = 0; y < os.h; ++y)
                    for (int64_t x = 0; x < os.w; ++x, ++i) {
                        double va = pa[bb * sa.b + c * sa.c + y * sa.h + x * sa.w];
                        double vb = pb[bb * sb.b + c * sb.c + y * sb.h + x * sb.w];
                        out[i] = op == BinOp::add ? va + vb : op == BinOp::sub ? va - vb : va * vb;
                    }
    }

    auto na = a.node_, nb = b.node_;
    auto abuf = a.buf_, bbuf = b.buf_;
    Shape as = a.shape(), bs = b.shape();
    return make_output(os, std::move(out), {&a, &b}, [=](Node& self) {
        if (op == BinOp::mul) {
            if (na) {
                std::vector<double> g(self.grad.size());
                Strides sbv = bcast_strides(bs, self.shape);
                size_t i = 0;
                for (int64_t bb = 0; bb < self.shape.b; ++bb)
                    for (int64_t c = 0; c < self.shape.c; ++c)
                        for (int64_t y = 0; y < self.shape.h; ++y)
                            for (int64_t x = 0; x < self.shape.w; ++x, ++i)
                                g[i] = self.grad[i] * (*bbuf)[bb * sbv.b + c * sbv.c + y * sbv.h + x * sbv.w];
                accum_reduced(g, self.shape, *na);
            }
            if (nb) {
                std::vector<double> g(self.grad.size());
                Strides sav = bcast_strides(as, self.shape);
                size_t i = 0;
                for (int64_t bb = 0; bb < self.shape.b; ++bb)
                    for (int64_t c = 0; c < self.shape.c; ++c)
                        for (int64_t y = 0; y < self.shape.h; ++y)
                            for (int64_t x = 0; x < self.shape.w; ++x, ++i)
                                g[i] = self.grad[i] * (*abuf)[bb * sav.b + c * sav.c + y * sav.h + x * sav.w];
                accum_reduced(g, self.shape, *nb);
            }
            return;
        }
        if (na) accum_reduced(self.grad, self.shape, *na);
        if (nb) {
            if (op == BinOp::add) {
                accum_reduced(self.grad, self.shape, *nb);
            } else {
                std::vector<double> g(self.grad.size());
                for (size_t i = 0; i < g.size(); ++i) g[i] = -self.grad[i];
                accum_reduced(g, self.shape, *nb);
            }
        }
    });
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::mul, "mul"); }

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double k) {
    std::vector<double> out(static_cast<size_t>(a.numel()));
    const double* p = a.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = k * p[i];
    return make_output(a.shape(), std::move(out), {&a}, [k](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += k * self.grad[i];
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(static_cast<size_t>(x.numel()));
    const double* p = x.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = p[i] > 0.0 ? p[i] : 0.0;
    auto xbuf = x.buf_;
    return make_output(x.shape(), std::move(out), {&x}, [xbuf](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        // subgradient at exactly 0 is 0
        for (size_t i = 0; i < self.grad.size(); ++i)
            if ((*xbuf)[i] > 0.0) p.grad[i] += self.grad[i];
    });
}

Tensor abs_val(const Tensor& x) {
    std::vector<double> out(static_cast<size_t>(x.numel()));
    const double* p = x.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(p[i]);
    auto xbuf = x.buf_;
    return make_output(x.shape(), std::move(out), {&x}, [xbuf](Node& self) {
        Node& p = *self.parents[0];
        p.ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double v = (*xbuf)[i];
            if (v > 0.0)
                p.grad[i] += self.grad[i];
            else if (v < 0.0)
                p.grad[i] -= self.grad[i];
        }
    });
}

namespace {

// shared inner kernels so forward and backward use one accumulation order
void conv_accumulate(const double* src, double* dst, double wv, int64_t H, int64_t W,
                     int64_t dy, int64_t dx) {
    // dst(y, x) += wv * src(y + dy, x + dx) over valid positions
    int64_t y_lo = std::max<int64_t>(0, -dy), y_hi = std::min<int64_t>(H, H - dy);
    int64_t x_lo = std::max<int64_t>(0, -dx), x_hi = std::min<int64_t>(W, W - dx);
    for (int64_t y = y_lo; y < y_hi; ++y) {
        const double* s = src + (y + dy) * W + dx;
        double* d = dst + y * W;
        for (int64_t x = x_lo; x < x_hi; ++x) d[x] += wv * s[x];
    }
}

double conv_correlate(const double* a, const double* b, int64_t H, int64_t W, int64_t dy,
                      int64_t dx) {
    // sum over valid positions of a(y, x) * b(y + dy, x + dx)
    double acc = 0.0;
    int64_t y_lo = std::max<int64_t>(0, -dy), y_hi = std::min<int64_t>(H, H - dy);
    int64_t x_lo = std::max<int64_t>(0, -dx), x_hi = std::min<int64_t>(W, W - dx);
    for (int64_t y = y_lo; y < y_hi; ++y) {
        const double* pa = a + y * W;
        const double* pb = b + (y + dy) * W + dx;
        for (int64_t x = x_lo; x < x_hi; ++x) acc += pa[x] * pb[x];
    }
    return acc;
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const Shape xs = x.shape();
    const Shape ws = weight.shape(); // [OC, IC, k, k]
    const int64_t OC = ws.b, IC = ws.c, K = ws.h;
    if (ws.h != ws.w || K < 1 || K % 2 == 0)
        throw std::invalid_argument("conv2d: kernel must be square and odd, got " + ws.str());
    if (xs.c != IC)
        throw std::invalid_argument("conv2d: input has " + std::to_string(xs.c) +
                                    " channels, layer expects " + std::to_string(IC));
    if (xs.h < 1 || xs.w < 1)
        throw std::invalid_argument("conv2d: zero spatial extent " + xs.str());
    if (!(bias.shape() == Shape{1, OC, 1, 1}))
        throw std::invalid_argument("conv2d: bias shape " + bias.shape().str() + " must be [1," +
                                    std::to_string(OC) + ",1,1]");

    const int64_t B = xs.b, H = xs.h, W = xs.w, P = K / 2;
    const int64_t plane = H * W;
    Shape os{B, OC, H, W};
    std::vector<double> out(static_cast<size_t>(os.numel()));
    const double* px = x.data();
    const double* pw = weight.data();
    const double* pb = bias.data();

    for (int64_t b = 0; b < B; ++b)
        for (int64_t oc = 0; oc < OC; ++oc) {
            double* dst = out.data() + (b * OC + oc) * plane;
            std::fill(dst, dst + plane, pb[oc]);
            for (int64_t ic = 0; ic < IC; ++ic) {
                const double* src = px + (b * IC + ic) * plane;
                const double* wrow = pw + (oc * IC + ic) * K * K;
                for (int64_t ky = 0; ky < K; ++ky)
                    for (int64_t kx = 0; kx < K; ++kx)
                        conv_accumulate(src, dst, wrow[ky * K + kx], H, W, ky - P, kx - P);
            }
        }

    auto xbuf = x.buf_;
    auto wbuf = weight.buf_;
    auto xn = x.node_, wn = weight.node_, bn = bias.node_;
    return make_output(os, std::move(out), {&x, &weight, &bias}, [=](Node& self) {
        const std::vector<double>& g = self.grad;
        if (xn) {
            xn->ensure_grad();
            for (int64_t b = 0; b < B; ++b)
                for (int64_t oc = 0; oc < OC; ++oc) {
                    const double* gout = g.data() + (b * OC + oc) * plane;
                    for (int64_t ic = 0; ic < IC; ++ic) {
                        double* gin = xn->grad.data() + (b * IC + ic) * plane;
                        const double* wrow = (*wbuf).data() + (oc * IC + ic) * K * K;
                        // forward reads in(y + ky - P, x + kx - P), so the
                        // gradient flows back with the offset mirrored
                        for (int64_t ky = 0; ky < K; ++ky)
                            for (int64_t kx = 0; kx < K; ++kx)
                                conv_accumulate(gout, gin, wrow[ky * K + kx], H, W, P - ky, P - kx);
                    }
                }
        }
        if (wn) {
            wn->ensure_grad();
            for (int64_t oc = 0; oc < OC; ++oc)
                for (int64_t ic = 0; ic < IC; ++ic)
                    for (int64_t ky = 0; ky < K; ++ky)
                        for (int64_t kx = 0; kx < K; ++kx) {
                            double acc = 0.0;
                            for (int64_t b = 0; b < B; ++b) {
                                const double* gout = g.data() + (b * OC + oc) * plane;
                                const double* src = (*xbuf).data() + (b * IC + ic) * plane;
                                acc += conv_correlate(gout, src, H, W, ky - P, kx - P);
                            }
                            wn->grad[(oc * IC + ic) * K * K + ky * K + kx] += acc;
                        }
        }
        if (bn) {
            bn->ensure_grad();
            for (int64_t b = 0; b < B; ++b)
                for (int64_t oc = 0; oc < OC; ++oc) {
                    const double* gout = g.data() + (b * OC + oc) * plane;
                    double acc = 0.0;
                    for (int64_t i = 0; i < plane; ++i) acc += gout[i];
                    bn->grad[oc] += acc;
                }
        }
    });
}

namespace {

// Walks every 1-D lane along `axis`; f(base, stride, n).
template <class F>
void for_each_lane(const Shape& s, int axis, F f) {
    int64_t ext[4] = {s.b, s.c, s.h, s.w};
    int64_t str[4] = {s.c * s.h * s.w, s.h * s.w, s.w, 1};
    int64_t n = ext[axis];
    int64_t stride = str[axis];
    int o[3], k = 0;
    for (int i = 0; i < 4; ++i)
        if (i != axis) o[k++] = i;
    for (int64_t i0 = 0; i0 < ext[o[0]]; ++i0)
        for (int64_t i1 = 0; i1 < ext[o[1]]; ++i1)
            for (int64_t i2 = 0; i2 < ext[o[2]]; ++i2)
                f(i0 * str[o[0]] + i1 * str[o[1]] + i2 * str[o[2]], stride, n);
}

} // namespace

Tensor softmax(const Tensor& x, int axis) {
    if (axis < 0 || axis > 3) throw std::invalid_argument("softmax: axis must be in [0,3]");
    if (x.shape()[axis] < 1) throw std::invalid_argument("softmax: empty axis");
    const double* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i)
        if (!std::isfinite(p[i])) throw std::invalid_argument("softmax: non-finite input");

    std::vector<double> out(static_cast<size_t>(x.numel()));
    for_each_lane(x.shape(), axis, [&](int64_t base, int64_t stride, int64_t n) {
        double m = p[base];
        for (int64_t i = 1; i < n; ++i) m = std::max(m, p[base + i * stride]);
        double sum = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            double e = std::exp(p[base + i * stride] - m);
            out[base + i * stride] = e;
            sum += e;
        }
        for (int64_t i = 0; i < n; ++i) out[base + i * stride] /= sum;
    });

    Tensor result = make_output(x.shape(), std::move(out), {&x}, nullptr);
    if (result.node_) {
        auto ybuf = result.buf_;
        Shape s = x.shape();
        result.node_->backprop = [ybuf, s, axis](Node& self) {
            Node& parent = *self.parents[0];
            parent.ensure_grad();
            const std::vector<double>& y = *ybuf;
            const std::vector<double>& g = self.grad;
            for_each_lane(s, axis, [&](int64_t base, int64_t stride, int64_t n) {
                double dot = 0.0;
                for (int64_t i = 0; i < n; ++i) dot += g[base + i * stride] * y[base + i * stride];
                for (int64_t i = 0; i < n; ++i) {
                    size_t k = base + i * stride;
                    parent.grad[k] += y[k] * (g[k] - dot);
                }
            });
        };
    }
    return result;
}

Tensor global_avg_pool(const Tensor& x) {
    const Shape s = x.shape();
    if (s.h < 1 || s.w < 1)
        throw std::invalid_argument("global_avg_pool: empty spatial extent " + s.str());
    const int64_t plane = s.h * s.w;
    Shape os{s.b, s.c, 1, 1};
    std::vector<double> out(static_cast<size_t>(os.numel()));
    const double* p = x.data();
    for (int64_t i = 0; i < os.numel(); ++i) {
        const double* src = p + i * plane;
        double acc = 0.0;
        for (int64_t k = 0; k < plane; ++k) acc += src[k];
        out[i] = acc / static_cast<double>(plane);
    }
    return make_output(os, std::move(out), {&x}, [plane](Node& self) {
        Node& parent = *self.parents[0];
        parent.ensure_grad();
        double inv = 1.0 / static_cast<double>(plane);
        for (size_t i = 0; i < self.grad.size(); ++i) {
            double gv = self.grad[i] * inv;
            double* dst = parent.grad.data() + i * plane;
            for (int64_t k = 0; k < plane; ++k) dst[k] += gv;
        }
    });
}

namespace {

// out_index -> in_index for pixel_shuffle; also drives the backward scatter
void shuffle_forward(const Shape& in, int r, const double* src, double* dst) {
    const int64_t B = in.b, C = in.c, H = in.h, W = in.w;
    const int64_t oc = C / (r * r), OH = H * r, OW = W * r;
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
            int64_t co = c / (r * r);
            int64_t rem = c % (r * r);
            int64_t i = rem / r, j = rem % r;
            const double* s = src + (b * C + c) * H * W;
            for (int64_t y = 0; y < H; ++y) {
                double* d = dst + ((b * oc + co) * OH + (y * r + i)) * OW + j;
                for (int64_t x = 0; x < W; ++x) d[x * r] += s[y * W + x];
            }
        }
}

void shuffle_backward(const Shape& in, int r, const double* gout, double* gin) {
    const int64_t B = in.b, C = in.c, H = in.h, W = in.w;
    const int64_t oc = C / (r * r), OH = H * r, OW = W * r;
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
            int64_t co = c / (r * r);
            int64_t rem = c % (r * r);
            int64_t i = rem / r, j = rem % r;
            double* d = gin + (b * C + c) * H * W;
            for (int64_t y = 0; y < H; ++y) {
                const double* s = gout + ((b * oc + co) * OH + (y * r + i)) * OW + j;
                for (int64_t x = 0; x < W; ++x) d[y * W + x] += s[x * r];
            }
        }
}

} // namespace

Tensor pixel_shuffle(const Tensor& x, int r) {
    const Shape s = x.shape();
    if (r < 1) throw std::invalid_argument("pixel_shuffle: factor must be >= 1");
    if (s.c % (static_cast<int64_t>(r) * r) != 0)
        throw std::invalid_argument("pixel_shuffle: " + std::to_string(s.c) +
                                    " channels not divisible by r^2 = " + std::to_string(r * r));
    Shape os{s.b, s.c / (r * r), s.h * r, s.w * r};
    std::vector<double> out(static_cast<size_t>(os.numel()));
    shuffle_forward(s, r, x.data(), out.data());
    return make_output(os, std::move(out), {&x}, [s, r](Node& self) {
        Node& parent = *self.parents[0];
        parent.ensure_grad();
        shuffle_backward(s, r, self.grad.data(), parent.grad.data());
    });
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
    const Shape s = x.shape();
    if (r < 1) throw std::invalid_argument("pixel_unshuffle: factor must be >= 1");
    if (s.h % r != 0 || s.w % r != 0)
        throw std::invalid_argument("pixel_unshuffle: spatial extents not divisible by r");
    Shape os{s.b, s.c * r * r, s.h / r, s.w / r};
    std::vector<double> out(static_cast<size_t>(os.numel()));
    // inverse of shuffle_forward: gather with the same index map
    shuffle_backward(os, r, x.data(), out.data());
    return make_output(os, std::move(out), {&x}, [os, r](Node& self) {
        Node& parent = *self.parents[0];
        parent.ensure_grad();
        shuffle_forward(os, r, self.grad.data(), parent.grad.data());
    });
}

Tensor reduce_sum(const Tensor& x, Shape target) {
    const Shape s = x.shape();
    for (int i = 0; i < 4; ++i)
        if (target[i] != s[i] && target[i] != 1)
            throw std::invalid_argument("reduce_sum: cannot reduce " + s.str() + " to " + target.str());
    std::vector<double> out(static_cast<size_t>(target.numel()), 0.0);
    Strides st = bcast_strides(target, s);
    const double* p = x.data();
    size_t i = 0;
    for (int64_t b = 0; b < s.b; ++b)
        for (int64_t c = 0; c < s.c; ++c)
            for (int64_t y = 0; y < s.h; ++y)
                for (int64_t x2 = 0; x2 < s.w; ++x2, ++i)
                    out[static_cast<size_t>(b * st.b + c * st.c + y * st.h + x2 * st.w)] += p[i];
    return make_output(target, std::move(out), {&x}, [s, st](Node& self) {
        Node& parent = *self.parents[0];
        parent.ensure_grad();
        size_t i = 0;
        for (int64_t b = 0; b < s.b; ++b)
            for (int64_t c = 0; c < s.c; ++c)
                for (int64_t y = 0; y < s.h; ++y)
                    for (int64_t x2 = 0; x2 < s.w; ++x2, ++i)
                        parent.grad[i] +=
                            self.grad[static_cast<size_t>(b * st.b + c * st.c + y * st.h + x2 * st.w)];
    });
}

Tensor sum_all(const Tensor& x) { return reduce_sum(x, {1, 1, 1, 1}); }

Tensor mean_all(const Tensor& x) {
    return scale(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: empty list");
    Shape s0 = parts[0].shape();
    int64_t ctotal = 0;
    for (const Tensor& t : parts) {
        const Shape s = t.shape();
        if (s.b != s0.b || s.h != s0.h || s.w != s0.w)
            throw std::invalid_argument("concat_channels: shape disagreement " + s.str() + " vs " +
                                        s0.str());
        ctotal += s.c;
    }
    Shape os{s0.b, ctotal, s0.h, s0.w};
    std::vector<double> out(static_cast<size_t>(os.numel()));
    const int64_t plane = s0.h * s0.w;
    int64_t coff = 0;
    for (const Tensor& t : parts) {
        const int64_t tc = t.shape().c;
        for (int64_t b = 0; b < s0.b; ++b)
            std::copy(t.data() + b * tc * plane, t.data() + (b + 1) * tc * plane,
                      out.data() + (b * ctotal + coff) * plane);
        coff += tc;
    }

    std::vector<std::shared_ptr<Node>> nodes;
    std::vector<int64_t> offs, cs;
    int64_t off = 0;
    for (const Tensor& t : parts) {
        nodes.push_back(t.node_);
        offs.push_back(off);
        cs.push_back(t.shape().c);
        off += t.shape().c;
    }
    std::vector<const Tensor*> ins;
    for (const Tensor& t : parts) ins.push_back(&t);
    return make_output(os, std::move(out), ins, [nodes, offs, cs, s0, ctotal, plane](Node& self) {
        for (size_t k = 0; k < nodes.size(); ++k) {
            if (!nodes[k]) continue;
            nodes[k]->ensure_grad();
            for (int64_t b = 0; b < s0.b; ++b) {
                const double* src = self.grad.data() + (b * ctotal + offs[k]) * plane;
                double* dst = nodes[k]->grad.data() + b * cs[k] * plane;
                for (int64_t i = 0; i < cs[k] * plane; ++i) dst[i] += src[i];
            }
        }
    });
}

Tensor slice_channels(const Tensor& x, int64_t first, int64_t count) {
    const Shape s = x.shape();
    if (first < 0 || count < 1 || first + count > s.c)
        throw std::invalid_argument("slice_channels: range [" + std::to_string(first) + "," +
                                    std::to_string(first + count) + ") out of " + s.str());
    Shape os{s.b, count, s.h, s.w};
    const int64_t plane = s.h * s.w;
    std::vector<double> out(static_cast<size_t>(os.numel()));
    for (int64_t b = 0; b < s.b; ++b)
        std::copy(x.data() + (b * s.c + first) * plane, x.data() + (b * s.c + first + count) * plane,
                  out.data() + b * count * plane);
    return make_output(os, std::move(out), {&x}, [s, first, count, plane](Node& self) {
        Node& parent = *self.parents[0];
        parent.ensure_grad();
        for (int64_t b = 0; b < s.b; ++b) {
            const double* src = self.grad.data() + b * count * plane;
            double* dst = parent.grad.data() + (b * s.c + first) * plane;
            for (int64_t i = 0; i < count * plane; ++i) dst[i] += src[i];
        }
    });
}

namespace {

Tensor pointwise_loss(const Tensor& pred, const Tensor& target, bool squared, const char* name) {
    if (!(pred.shape() == target.shape()))
        throw std::invalid_argument(std::string(name) + ": shape mismatch " + pred.shape().str() +
                                    " vs " + target.shape().str());
    const int64_t n = pred.numel();
    const double* pp = pred.data();
    const double* pt = target.data();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double d = pp[i] - pt[i];
        acc += squared ? d * d : std::fabs(d);
    }
    std::vector<double> out{acc / static_cast<double>(n)};
    auto pbuf = pred.buf_, tbuf = target.buf_;
    auto pn = pred.node_, tn = target.node_;
    return make_output({1, 1, 1, 1}, std::move(out), {&pred, &target}, [=](Node& self) {
        double g = self.grad[0] / static_cast<double>(n);
        for (int64_t i = 0; i < n; ++i) {
            double d = (*pbuf)[i] - (*tbuf)[i];
            double gi;
            if (squared)
                gi = 2.0 * d * g;
            else
                gi = d > 0.0 ? g : d < 0.0 ? -g : 0.0;
            if (pn) {
                pn->ensure_grad();
                pn->grad[i] += gi;
            }
            if (tn) {
                tn->ensure_grad();
                tn->grad[i] -= gi;
            }
        }
    });
}

} // namespace

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
    return pointwise_loss(pred, target, false, "l1_loss");
}

Tensor l2_loss(const Tensor& pred, const Tensor& target) {
    return pointwise_loss(pred, target, true, "l2_loss");
}

Conv2dLayer::Conv2dLayer(std::string name, int in_channels, int out_channels, int ksize)
    : weight(name + ".weight", Tensor({out_channels, in_channels, ksize, ksize})),
      bias(name + ".bias", Tensor({1, out_channels, 1, 1})) {
    if (in_channels < 1 || out_channels < 1)
        throw std::invalid_argument("Conv2dLayer: zero channels in " + name);
    if (ksize < 1 || ksize % 2 == 0)
        throw std::invalid_argument("Conv2dLayer: kernel size must be odd in " + name);
}

} // namespace acube
