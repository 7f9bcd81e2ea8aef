#include "hgat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hgat {

namespace {

using detail::TensorData;
using detail::grad_buffer;

using Data = std::shared_ptr<TensorData>;

std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

[[noreturn]] void shape_error(const std::string& what) {
    throw NumericError("tensor shape mismatch: " + what);
}

// Output gradient, or null if backward never reached this tensor.
const std::vector<double>* out_grad(const Data& d) {
    return d->grad.empty() ? nullptr : &d->grad;
}

}  // namespace

namespace detail {

std::vector<double>& grad_buffer(TensorData* t) {
    if (t->grad.empty()) t->grad.assign(t->value.size(), 0.0);
    return t->grad;
}

void accumulate_grad(TensorData* t, std::span<const double> g) {
    auto& buf = grad_buffer(t);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape) {
    auto d = std::make_shared<TensorData>();
    d->value.assign(shape_product(shape), 0.0);
    d->shape = std::move(shape);
    return Tensor(std::move(d));
}

Tensor Tensor::from(Shape shape, std::vector<double> value) {
    if (shape_product(shape) != value.size()) {
        shape_error("value length does not match shape");
    }
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->value = std::move(value);
    return Tensor(std::move(d));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

double Tensor::item() const {
    if (size() != 1) shape_error("item() on non-scalar tensor");
    return d_->value[0];
}

void Tensor::set_requires_grad(bool on) {
    d_->requires_grad = on;
    d_->needs_grad = on;
}

std::span<const double> Tensor::grad() const {
    return detail::grad_buffer(d_.get());
}

void Tensor::clear_grad() { d_->grad.clear(); }

Tensor Tensor::clone() const {
    return Tensor::from(d_->shape, d_->value);
}

Activation activation_from_name(const std::string& name) {
    if (name == "leaky_relu") return Activation::LeakyRelu;
    if (name == "elu") return Activation::Elu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation kind: " + name);
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Elu: return "elu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    throw ConfigError("unknown activation enum value");
}

void Tape::record(Tensor& out, std::initializer_list<const Tensor*> inputs,
                  std::function<void()> backward_fn) {
    bool needs = false;
    for (const Tensor* in : inputs) {
        if (in->data()->needs_grad) needs = true;
    }
    if (needs) {
        out.data()->needs_grad = true;
        entries_.push_back({std::move(backward_fn)});
    }
}

void Tape::record_multi(Tensor& out, const std::vector<Tensor>& inputs,
                        std::function<void()> backward_fn) {
    bool needs = false;
    for (const Tensor& in : inputs) {
        if (in.data()->needs_grad) needs = true;
    }
    if (needs) {
        out.data()->needs_grad = true;
        entries_.push_back({std::move(backward_fn)});
    }
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) shape_error("matmul expects rank-2 operands");
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    if (k != b.extent(0)) shape_error("matmul inner extents disagree");
    std::vector<double> out(m * n, 0.0);
    auto av = a.value();
    auto bv = b.value();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                out[i * n + j] += aip * bv[p * n + j];
            }
        }
    }
    Tensor result = Tensor::from({m, n}, std::move(out));
    Data ad = a.d_, bd = b.d_, od = result.d_;
    record(result, {&a, &b}, [ad, bd, od, m, k, n]() {
        const auto* g = out_grad(od);
        if (!g) return;
        if (ad->needs_grad) {
            auto& ga = grad_buffer(ad.get());
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double gij = (*g)[i * n + j];
                    if (gij == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p)
                        ga[i * k + p] += gij * bd->value[p * n + j];
                }
        }
        if (bd->needs_grad) {
            auto& gb = grad_buffer(bd.get());
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = ad->value[i * k + p];
                    if (aip == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        gb[p * n + j] += aip * (*g)[i * n + j];
                }
        }
    });
    return result;
}

Tensor Tape::transpose(const Tensor& a) {
    if (a.rank() != 2) shape_error("transpose expects a rank-2 tensor");
    const std::size_t r = a.extent(0), c = a.extent(1);
    std::vector<double> out(r * c);
    auto av = a.value();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
    Tensor result = Tensor::from({c, r}, std::move(out));
    Data ad = a.d_, od = result.d_;
    record(result, {&a}, [ad, od, r, c]() {
        const auto* g = out_grad(od);
        if (!g) return;
        auto& ga = grad_buffer(ad.get());
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += (*g)[j * r + i];
    });
    return result;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("add expects identical shapes");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
    Tensor result = Tensor::from(a.shape(), std::move(out));
    Data ad = a.d_, bd = b.d_, od = result.d_;
    record(result, {&a, &b}, [ad, bd, od]() {
        const auto* g = out_grad(od);
        if (!g) return;
        if (ad->needs_grad) detail::accumulate_grad(ad.get(), *g);
        if (bd->needs_grad) detail::accumulate_grad(bd.get(), *g);
    });
    return result;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("mul expects identical shapes");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
    Tensor result = Tensor::from(a.shape(), std::move(out));
    Data ad = a.d_, bd = b.d_, od = result.d_;
    record(result, {&a, &b}, [ad, bd, od]() {
        const auto* g = out_grad(od);
        if (!g) return;
        if (ad->needs_grad) {
            auto& ga = grad_buffer(ad.get());
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += (*g)[i] * bd->value[i];
        }
        if (bd->needs_grad) {
            auto& gb = grad_buffer(bd.get());
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += (*g)[i] * ad->value[i];
        }
    });
    return result;
}

Tensor Tape::affine(const Tensor& x, double scale, double shift) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * x.value()[i] + shift;
    Tensor result = Tensor::from(x.shape(), std::move(out));
    Data xd = x.d_, od = result.d_;
    record(result, {&x}, [xd, od, scale]() {
        const auto* g = out_grad(od);
        if (!g) return;
        auto& gx = grad_buffer(xd.get());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += scale * (*g)[i];
    });
    return result;
}

Tensor Tape::concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) shape_error("concat of zero tensors");
    const std::size_t rank = parts[0].rank();
    if (rank != 1 && rank != 2) shape_error("concat supports rank 1 and 2");
    const std::size_t lead = rank == 2 ? parts[0].extent(0) : 1;
    std::size_t total_cols = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != rank) shape_error("concat ranks disagree");
        if (rank == 2 && p.extent(0) != lead) shape_error("concat leading extents disagree");
        total_cols += p.extent(rank - 1);
    }
    std::vector<double> out(lead * total_cols);
    std::size_t col = 0;
    std::vector<Data> datas;
    std::vector<std::size_t> offsets;
    datas.reserve(parts.size());
    for (const Tensor& p : parts) {
        const std::size_t c = p.extent(rank - 1);
        for (std::size_t i = 0; i < lead; ++i) {
            std::copy_n(p.value().data() + i * c, c, out.data() + i * total_cols + col);
        }
        datas.push_back(p.d_);
        offsets.push_back(col);
        col += c;
    }
    Shape shape = rank == 2 ? Shape{lead, total_cols} : Shape{total_cols};
    Tensor result = Tensor::from(std::move(shape), std::move(out));
    Data od = result.d_;
    record_multi(result, parts,
                 [datas = std::move(datas), offsets = std::move(offsets), od, lead, total_cols, rank]() {
        const auto* g = out_grad(od);
        if (!g) return;
        for (std::size_t p = 0; p < datas.size(); ++p) {
            if (!datas[p]->needs_grad) continue;
            const std::size_t c = datas[p]->shape[rank - 1];
            auto& gp = grad_buffer(datas[p].get());
            for (std::size_t i = 0; i < lead; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    gp[i * c + j] += (*g)[i * total_cols + offsets[p] + j];
        }
    });
    return result;
}

Tensor Tape::reshape(const Tensor& x, Shape shape) {
    if (shape_product(shape) != x.size()) shape_error("reshape changes element count");
    Tensor result = Tensor::from(std::move(shape),
                                 std::vector<double>(x.value().begin(), x.value().end()));
    Data xd = x.d_, od = result.d_;
    record(result, {&x}, [xd, od]() {
        const auto* g = out_grad(od);
        if (g) detail::accumulate_grad(xd.get(), *g);
    });
    return result;
}

Tensor Tape::row(const Tensor& m, std::size_t i) {
    if (m.rank() != 2) shape_error("row expects a rank-2 tensor");
    if (i >= m.extent(0)) shape_error("row index out of range");
    const std::size_t c = m.extent(1);
    std::vector<double> out(m.value().begin() + static_cast<std::ptrdiff_t>(i * c),
                            m.value().begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
    Tensor result = Tensor::from({c}, std::move(out));
    Data md = m.d_, od = result.d_;
    record(result, {&m}, [md, od, i, c]() {
        const auto* g = out_grad(od);
        if (!g) return;
        auto& gm = grad_buffer(md.get());
        for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += (*g)[j];
    });
    return result;
}

Tensor Tape::rows(const Tensor& m, const std::vector<std::size_t>& idx) {
    if (m.rank() != 2) shape_error("rows expects a rank-2 tensor");
    const std::size_t c = m.extent(1);
    std::vector<double> out(idx.size() * c);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] >= m.extent(0)) shape_error("rows index out of range");
        std::copy_n(m.value().data() + idx[j] * c, c, out.data() + j * c);
    }
    Tensor result = Tensor::from({idx.size(), c}, std::move(out));
    Data md = m.d_, od = result.d_;
    record(result, {&m}, [md, od, idx, c]() {
        const auto* g = out_grad(od);
        if (!g) return;
        auto& gm = grad_buffer(md.get());
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t j = 0; j < c; ++j) gm[idx[r] * c + j] += (*g)[r * c + j];
    });
    return result;
}

Tensor Tape::stack(const std::vector<Tensor>& scalars) {
    if (scalars.empty()) shape_error("stack of zero scalars");
    std::vector<double> out(scalars.size());
    std::vector<Data> datas;
    datas.reserve(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (scalars[i].size() != 1) shape_error("stack expects scalar tensors");
        out[i] = scalars[i].value()[0];
        datas.push_back(scalars[i].d_);
    }
    Tensor result = Tensor::from({scalars.size()}, std::move(out));
    Data od = result.d_;
    record_multi(result, scalars, [datas = std::move(datas), od]() {
        const auto* g = out_grad(od);
        if (!g) return;
        for (std::size_t i = 0; i < datas.size(); ++i) {
            if (datas[i]->needs_grad) grad_buffer(datas[i].get())[0] += (*g)[i];
        }
    });
    return result;
}

Tensor Tape::stack_rows(const std::vector<Tensor>& vectors) {
    if (vectors.empty()) shape_error("stack_rows of zero vectors");
    const std::size_t c = vectors[0].size();
    std::vector<double> out(vectors.size() * c);
    std::vector<Data> datas;
    datas.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].rank() != 1 || vectors[i].size() != c) {
            shape_error("stack_rows expects equal-length vectors");
        }
        std::copy_n(vectors[i].value().data(), c, out.data() + i * c);
        datas.push_back(vectors[i].d_);
    }
    Tensor result = Tensor::from({vectors.size(), c}, std::move(out));
    Data od = result.d_;
    record_multi(result, vectors, [datas = std::move(datas), od, c]() {
        const auto* g = out_grad(od);
        if (!g) return;
        for (std::size_t i = 0; i < datas.size(); ++i) {
            if (!datas[i]->needs_grad) continue;
            auto& gv = grad_buffer(datas[i].get());
            for (std::size_t j = 0; j < c; ++j) gv[j] += (*g)[i * c + j];
        }
    });
    return result;
}

Tensor Tape::dot(const Tensor& a, const Tensor& b) {
    if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size()) {
        shape_error("dot expects equal-length vectors");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.value()[i] * b.value()[i];
    Tensor result = Tensor::scalar(s);
    Data ad = a.d_, bd = b.d_, od = result.d_;
    record(result, {&a, &b}, [ad, bd, od]() {
        const auto* g = out_grad(od);
        if (!g) return;
        const double g0 = (*g)[0];
        if (ad->needs_grad) {
            auto& ga = grad_buffer(ad.get());
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g0 * bd->value[i];
        }
        if (bd->needs_grad) {
            auto& gb = grad_buffer(bd.get());
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g0 * ad->value[i];
        }
    });
    return result;
}

Tensor Tape::masked_softmax(const Tensor& logits, const std::vector<bool>& mask) {
    if (logits.rank() != 1) shape_error("masked_softmax expects a vector");
    if (mask.size() != logits.size()) shape_error("mask length differs from logits");
    if (std::find(mask.begin(), mask.end(), true) == mask.end()) {
        throw NumericError("masked_softmax: empty support (all-false mask)");
    }
    auto lv = logits.value();
    double max_retained = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lv.size(); ++i) {
        if (mask[i]) max_retained = std::max(max_retained, lv[i]);
    }
    std::vector<double> out(lv.size(), 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
        if (mask[i]) {
            out[i] = std::exp(lv[i] - max_retained);
            z += out[i];
        }
    }
    for (std::size_t i = 0; i < lv.size(); ++i) {
        if (mask[i]) out[i] /= z;
    }
    Tensor result = Tensor::from(logits.shape(), std::move(out));
    Data ld = logits.d_, od = result.d_;
    record(result, {&logits}, [ld, od, mask]() {
        const auto* g = out_grad(od);
        if (!g) return;
        const auto& y = od->value;
        double weighted = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) weighted += (*g)[j] * y[j];
        auto& gl = grad_buffer(ld.get());
        for (std::size_t i = 0; i < gl.size(); ++i) {
            if (mask[i]) gl[i] += y[i] * ((*g)[i] - weighted);
        }
    });
    return result;
}

Tensor Tape::softmax(const Tensor& logits) {
    return masked_softmax(logits, std::vector<bool>(logits.size(), true));
}

Tensor Tape::activation(Activation kind, const Tensor& x, double leaky_slope) {
    std::vector<double> out(x.size());
    auto xv = x.value();
    switch (kind) {
        case Activation::LeakyRelu:
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = xv[i] > 0.0 ? xv[i] : leaky_slope * xv[i];
            }
            break;
        case Activation::Elu:
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = xv[i] > 0.0 ? xv[i] : std::expm1(xv[i]);
            }
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
            }
            break;
        case Activation::Identity:
            std::copy(xv.begin(), xv.end(), out.begin());
            break;
    }
    Tensor result = Tensor::from(x.shape(), std::move(out));
    Data xd = x.d_, od = result.d_;
    // Derivatives are recovered from the saved output: both leaky-relu and
    // elu are strictly increasing, so sign(out) determines the branch.
    record(result, {&x}, [xd, od, kind, leaky_slope]() {
        const auto* g = out_grad(od);
        if (!g) return;
        auto& gx = grad_buffer(xd.get());
        const auto& y = od->value;
        switch (kind) {
            case Activation::LeakyRelu:
                for (std::size_t i = 0; i < gx.size(); ++i)
                    gx[i] += (*g)[i] * (y[i] > 0.0 ? 1.0 : leaky_slope);
                break;
            case Activation::Elu:
                for (std::size_t i = 0; i < gx.size(); ++i)
                    gx[i] += (*g)[i] * (y[i] > 0.0 ? 1.0 : y[i] + 1.0);
                break;
            case Activation::Sigmoid:
                for (std::size_t i = 0; i < gx.size(); ++i)
                    gx[i] += (*g)[i] * y[i] * (1.0 - y[i]);
                break;
            case Activation::Identity:
                for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += (*g)[i];
                break;
        }
    });
    return result;
}

Tensor Tape::log(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(x.value()[i]);
    Tensor result = Tensor::from(x.shape(), std::move(out));
    Data xd = x.d_, od = result.d_;
    record(result, {&x}, [xd, od]() {
        const auto* g = out_grad(od);
        if (!g) return;
        auto& gx = grad_buffer(xd.get());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += (*g)[i] / xd->value[i];
    });
    return result;
}

Tensor Tape::clamp(const Tensor& x, double lo, double hi) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(x.value()[i], lo, hi);
    Tensor result = Tensor::from(x.shape(), std::move(out));
    Data xd = x.d_, od = result.d_;
    record(result, {&x}, [xd, od, lo, hi]() {
        const auto* g = out_grad(od);
        if (!g) return;
        auto& gx = grad_buffer(xd.get());
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double v = xd->value[i];
            if (v >= lo && v <= hi) gx[i] += (*g)[i];
        }
    });
    return result;
}

Tensor Tape::pick(const Tensor& v, std::size_t index) {
    if (v.rank() != 1) shape_error("pick expects a vector");
    if (index >= v.size()) shape_error("pick index out of range");
    Tensor result = Tensor::scalar(v.value()[index]);
    Data vd = v.d_, od = result.d_;
    record(result, {&v}, [vd, od, index]() {
        const auto* g = out_grad(od);
        if (g) grad_buffer(vd.get())[index] += (*g)[0];
    });
    return result;
}

Tensor Tape::sum(const Tensor& x) {
    Tensor result = Tensor::scalar(std::accumulate(x.value().begin(), x.value().end(), 0.0));
    Data xd = x.d_, od = result.d_;
    record(result, {&x}, [xd, od]() {
        const auto* g = out_grad(od);
        if (!g) return;
        auto& gx = grad_buffer(xd.get());
        for (double& gi : gx) gi += (*g)[0];
    });
    return result;
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) throw NumericError("backward: loss must be scalar");
    if (backward_done_) throw NumericError("backward: tape already consumed; build a fresh tape");
    backward_done_ = true;
    detail::grad_buffer(loss.data())[0] = 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        it->backward();
    }
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                  const Tensor& x, double eps) {
    if (eps <= 0.0) throw NumericError("finite_difference_gradient: eps must be positive");
    Tensor probe = x.clone();
    Tensor grad = Tensor::zeros(x.shape());
    auto pv = probe.mutable_value();
    auto gv = grad.mutable_value();
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double keep = pv[i];
        pv[i] = keep + eps;
        const double hi = f(probe);
        pv[i] = keep - eps;
        const double lo = f(probe);
        pv[i] = keep;
        gv[i] = (hi - lo) / (2.0 * eps);
    }
    return grad;
}

}  // namespace hgat
