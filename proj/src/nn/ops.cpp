#include "cyberdial/nn/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cyberdial/nn/kernels.hpp"

namespace cyberdial::nn {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b)
{
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols));
}

Tape& tape_of(Value v)
{
    if (!v.valid()) throw std::invalid_argument("invalid value handle");
    return *v.tape();
}

// Element-wise unary op with derivative expressed through input x and output y.
template <typename F, typename D>
Value unary(Value x, F f, D dfdx)
{
    Tape& tape = tape_of(x);
    const Tensor& in = x.data();
    Tensor out(in.rows, in.cols);
    for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = f(in.data[i]);
    const int xi = x.id();
    return tape.record(std::move(out), {x}, [xi, dfdx](Tape& t, int self) {
        const auto& g = t.grad(self).data;
        const auto& xin = t.value(xi).data;
        const auto& y = t.value(self).data;
        auto& dx = t.grad_accumulator(xi).data;
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * dfdx(xin[i], y[i]);
    });
}

}  // namespace

Value lookup(Value table, std::span<const int> indices)
{
    Tape& tape = tape_of(table);
    const Tensor& t = table.data();
    Tensor out(static_cast<int>(indices.size()), t.cols);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const int idx = indices[r];
        if (idx == -1) continue;
        if (idx < 0 || idx >= t.rows)
            throw std::out_of_range("lookup index " + std::to_string(idx) + " outside table of " +
                                    std::to_string(t.rows) + " rows");
        auto src = t.row(idx);
        std::copy(src.begin(), src.end(), out.row(static_cast<int>(r)).begin());
    }
    const int ti = table.id();
    std::vector<int> idx(indices.begin(), indices.end());
    return tape.record(std::move(out), {table}, [ti, idx = std::move(idx)](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& dt = tp.grad_accumulator(ti);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            if (idx[r] < 0) continue;
            auto src = g.row(static_cast<int>(r));
            auto dst = dt.row(idx[r]);
            for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
        }
    });
}

Value affine(Value x, Value w, Value b)
{
    Tape& tape = tape_of(x);
    const Tensor& xin = x.data();
    const Tensor& wt = w.data();
    const Tensor& bt = b.data();
    if (xin.cols != wt.rows) shape_error("affine", xin, wt);
    if (bt.rows != 1 || bt.cols != wt.cols) shape_error("affine bias", bt, wt);
    Tensor out(xin.rows, wt.cols);
    for (int r = 0; r < out.rows; ++r) std::copy(bt.data.begin(), bt.data.end(), out.row(r).begin());
    kernels::gemm_nn(xin.rows, wt.cols, xin.cols, xin.data.data(), wt.data.data(), out.data.data());
    const int xi = x.id(), wi = w.id(), bi = b.id();
    return tape.record(std::move(out), {x, w, b}, [xi, wi, bi](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        const Tensor& xv = t.value(xi);
        const Tensor& wv = t.value(wi);
        if (t.requires_grad(xi))
            kernels::gemm_nt(g.rows, g.cols, wv.rows, g.data.data(), wv.data.data(), t.grad_accumulator(xi).data.data());
        if (t.requires_grad(wi))
            kernels::gemm_tn(xv.rows, g.cols, xv.cols, xv.data.data(), g.data.data(), t.grad_accumulator(wi).data.data());
        if (t.requires_grad(bi)) {
            auto& db = t.grad_accumulator(bi).data;
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) db[c] += g(r, c);
        }
    });
}

Value relu(Value x)
{
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Value logistic(Value x)
{
    return unary(x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double, double y) { return y * (1.0 - y); });
}

Value tanh(Value x)
{
    return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Value abs(Value x)
{
    return unary(x, [](double v) { return std::fabs(v); },
                 [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Value elu(Value x)
{
    return unary(x, [](double v) { return v > 0.0 ? v : std::expm1(v); },
                 [](double v, double y) { return v > 0.0 ? 1.0 : y + 1.0; });
}

Value sum_elementwise(const std::vector<Value>& terms)
{
    if (terms.empty()) throw std::invalid_argument("sum_elementwise: no operands");
    Tape& tape = tape_of(terms.front());
    Tensor out = terms.front().data();
    for (std::size_t k = 1; k < terms.size(); ++k) {
        const Tensor& v = terms[k].data();
        if (!v.same_shape(out)) shape_error("sum_elementwise", out, v);
        for (std::size_t i = 0; i < v.size(); ++i) out.data[i] += v.data[i];
    }
    std::vector<int> ids;
    for (const auto& v : terms) ids.push_back(v.id());
    return tape.record(std::move(out), terms, [ids = std::move(ids)](Tape& t, int self) {
        const auto& g = t.grad(self).data;
        for (int id : ids) {
            if (!t.requires_grad(id)) continue;
            auto& d = t.grad_accumulator(id).data;
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
    });
}

Value add(Value a, Value b) { return sum_elementwise({a, b}); }

Value scale(Value x, double factor)
{
    return unary(x, [factor](double v) { return factor * v; }, [factor](double, double) { return factor; });
}

Value add_constant(Value x, const Tensor& c)
{
    Tape& tape = tape_of(x);
    const Tensor& in = x.data();
    if (!in.same_shape(c)) shape_error("add_constant", in, c);
    Tensor out = in;
    for (std::size_t i = 0; i < c.size(); ++i) out.data[i] += c.data[i];
    const int xi = x.id();
    return tape.record(std::move(out), {x}, [xi](Tape& t, int self) {
        const auto& g = t.grad(self).data;
        auto& d = t.grad_accumulator(xi).data;
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    });
}

Value gru_cell(const GruWeights& weights, Value x, Value h)
{
    Tape& tape = tape_of(x);
    const Tensor& xin = x.data();
    const Tensor& hin = h.data();
    const Tensor& wi = weights.w_input.data();
    const Tensor& wh = weights.w_hidden.data();
    const Tensor& bi = weights.b_input.data();
    const Tensor& bh = weights.b_hidden.data();
    const int rows = xin.rows;
    const int hidden = hin.cols;
    if (hin.rows != rows) shape_error("gru_cell x/h", xin, hin);
    if (wi.rows != xin.cols || wi.cols != 3 * hidden) shape_error("gru_cell w_input", wi, xin);
    if (wh.rows != hidden || wh.cols != 3 * hidden) shape_error("gru_cell w_hidden", wh, hin);
    if (bi.rows != 1 || bi.cols != 3 * hidden) shape_error("gru_cell b_input", bi, wi);
    if (bh.rows != 1 || bh.cols != 3 * hidden) shape_error("gru_cell b_hidden", bh, wh);

    Tensor gi(rows, 3 * hidden), gh(rows, 3 * hidden);
    for (int r = 0; r < rows; ++r) {
        std::copy(bi.data.begin(), bi.data.end(), gi.row(r).begin());
        std::copy(bh.data.begin(), bh.data.end(), gh.row(r).begin());
    }
    kernels::gemm_nn(rows, 3 * hidden, xin.cols, xin.data.data(), wi.data.data(), gi.data.data());
    kernels::gemm_nn(rows, 3 * hidden, hidden, hin.data.data(), wh.data.data(), gh.data.data());

    // Saved for backward: gates r, z, candidate n and the hidden-side
    // candidate pre-activation.
    auto saved = std::make_shared<Tensor>(rows, 4 * hidden);
    Tensor out(rows, hidden);
    for (int r = 0; r < rows; ++r) {
        const double* a = &gi(r, 0);
        const double* b = &gh(r, 0);
        double* s = &(*saved)(r, 0);
        for (int j = 0; j < hidden; ++j) {
            const double rg = 1.0 / (1.0 + std::exp(-(a[j] + b[j])));
            const double zg = 1.0 / (1.0 + std::exp(-(a[hidden + j] + b[hidden + j])));
            const double ng = std::tanh(a[2 * hidden + j] + rg * b[2 * hidden + j]);
            s[j] = rg;
            s[hidden + j] = zg;
            s[2 * hidden + j] = ng;
            s[3 * hidden + j] = b[2 * hidden + j];
            out(r, j) = (1.0 - zg) * ng + zg * hin(r, j);
        }
    }

    const int xi = x.id(), hi = h.id();
    const int wii = weights.w_input.id(), whi = weights.w_hidden.id();
    const int bii = weights.b_input.id(), bhi = weights.b_hidden.id();
    return tape.record(
        std::move(out), {x, h, weights.w_input, weights.w_hidden, weights.b_input, weights.b_hidden},
        [=](Tape& t, int self) {
            const Tensor& g = t.grad(self);
            const Tensor& xv = t.value(xi);
            const Tensor& hv = t.value(hi);
            Tensor dgi(rows, 3 * hidden), dgh(rows, 3 * hidden);
            for (int r = 0; r < rows; ++r) {
                const double* s = &(*saved)(r, 0);
                for (int j = 0; j < hidden; ++j) {
                    const double rg = s[j], zg = s[hidden + j], ng = s[2 * hidden + j], hn = s[3 * hidden + j];
                    const double dh = g(r, j);
                    const double dn = dh * (1.0 - zg) * (1.0 - ng * ng);
                    const double dz = dh * (hv(r, j) - ng) * zg * (1.0 - zg);
                    const double dr = dn * hn * rg * (1.0 - rg);
                    dgi(r, j) = dr;
                    dgi(r, hidden + j) = dz;
                    dgi(r, 2 * hidden + j) = dn;
                    dgh(r, j) = dr;
                    dgh(r, hidden + j) = dz;
                    dgh(r, 2 * hidden + j) = dn * rg;
                }
            }
            if (t.requires_grad(hi)) {
                Tensor& dhv = t.grad_accumulator(hi);
                for (int r = 0; r < rows; ++r)
                    for (int j = 0; j < hidden; ++j) dhv(r, j) += g(r, j) * (*saved)(r, hidden + j);
                kernels::gemm_nt(rows, 3 * hidden, hidden, dgh.data.data(), t.value(whi).data.data(), dhv.data.data());
            }
            if (t.requires_grad(xi))
                kernels::gemm_nt(rows, 3 * hidden, xv.cols, dgi.data.data(), t.value(wii).data.data(),
                                 t.grad_accumulator(xi).data.data());
            if (t.requires_grad(wii))
                kernels::gemm_tn(rows, 3 * hidden, xv.cols, xv.data.data(), dgi.data.data(),
                                 t.grad_accumulator(wii).data.data());
            if (t.requires_grad(whi))
                kernels::gemm_tn(rows, 3 * hidden, hidden, hv.data.data(), dgh.data.data(),
                                 t.grad_accumulator(whi).data.data());
            auto colsum = [&](const Tensor& d, int id) {
                if (!t.requires_grad(id)) return;
                auto& db = t.grad_accumulator(id).data;
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < 3 * hidden; ++c) db[c] += d(r, c);
            };
            colsum(dgi, bii);
            colsum(dgh, bhi);
        });
}

Value pick(Value x, std::span<const int> column)
{
    Tape& tape = tape_of(x);
    const Tensor& in = x.data();
    if (static_cast<int>(column.size()) != in.rows) throw std::invalid_argument("pick: one column per row required");
    Tensor out(in.rows, 1);
    for (int r = 0; r < in.rows; ++r) {
        if (column[r] < -1 || column[r] >= in.cols) throw std::out_of_range("pick: column out of range");
        if (column[r] >= 0) out(r, 0) = in(r, column[r]);
    }
    const int xi = x.id();
    std::vector<int> cols(column.begin(), column.end());
    return tape.record(std::move(out), {x}, [xi, cols = std::move(cols)](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        Tensor& d = t.grad_accumulator(xi);
        for (int r = 0; r < g.rows; ++r)
            if (cols[r] >= 0) d(r, cols[r]) += g(r, 0);
    });
}

Value route_rows(Value x, const std::vector<std::vector<int>>& sources)
{
    Tape& tape = tape_of(x);
    const Tensor& in = x.data();
    Tensor out(static_cast<int>(sources.size()), in.cols);
    for (std::size_t r = 0; r < sources.size(); ++r)
        for (int s : sources[r]) {
            if (s < 0 || s >= in.rows) throw std::out_of_range("route_rows: source row out of range");
            for (int c = 0; c < in.cols; ++c) out(static_cast<int>(r), c) += in(s, c);
        }
    const int xi = x.id();
    return tape.record(std::move(out), {x}, [xi, sources](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        Tensor& d = t.grad_accumulator(xi);
        for (std::size_t r = 0; r < sources.size(); ++r)
            for (int s : sources[r])
                for (int c = 0; c < g.cols; ++c) d(s, c) += g(static_cast<int>(r), c);
    });
}

Value reshape(Value x, int rows, int cols)
{
    Tape& tape = tape_of(x);
    const Tensor& in = x.data();
    if (static_cast<std::size_t>(rows) * cols != in.size()) throw std::invalid_argument("reshape: size mismatch");
    Tensor out(rows, cols, in.data);
    const int xi = x.id();
    return tape.record(std::move(out), {x}, [xi](Tape& t, int self) {
        const auto& g = t.grad(self).data;
        auto& d = t.grad_accumulator(xi).data;
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    });
}

Value batched_vecmat(Value x, Value w, int cols)
{
    Tape& tape = tape_of(x);
    const Tensor& xv = x.data();
    const Tensor& wv = w.data();
    if (wv.rows != xv.rows || wv.cols != xv.cols * cols) shape_error("batched_vecmat", xv, wv);
    const int n = xv.cols;
    Tensor out(xv.rows, cols);
    for (int b = 0; b < xv.rows; ++b)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < cols; ++j) out(b, j) += xv(b, i) * wv(b, i * cols + j);
    const int xi = x.id(), wi = w.id();
    return tape.record(std::move(out), {x, w}, [xi, wi, n, cols](Tape& t, int self) {
        const Tensor& g = t.grad(self);
        const Tensor& xv2 = t.value(xi);
        const Tensor& wv2 = t.value(wi);
        const bool gx = t.requires_grad(xi), gw = t.requires_grad(wi);
        Tensor* dx = gx ? &t.grad_accumulator(xi) : nullptr;
        Tensor* dw = gw ? &t.grad_accumulator(wi) : nullptr;
        for (int b = 0; b < g.rows; ++b)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < cols; ++j) {
                    if (gx) (*dx)(b, i) += g(b, j) * wv2(b, i * cols + j);
                    if (gw) (*dw)(b, i * cols + j) += g(b, j) * xv2(b, i);
                }
    });
}

Value weighted_squared_error(Value pred, const Tensor& target, const Tensor& weight)
{
    Tape& tape = tape_of(pred);
    const Tensor& p = pred.data();
    if (!p.same_shape(target)) shape_error("weighted_squared_error target", p, target);
    if (!p.same_shape(weight)) shape_error("weighted_squared_error weight", p, weight);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = p.data[i] - target.data[i];
        sum += weight.data[i] * e * e;
    }
    const int pi = pred.id();
    return tape.record(Tensor(1, 1, sum), {pred}, [pi, target, weight](Tape& t, int self) {
        const double g = t.grad(self).data[0];
        const auto& pv = t.value(pi).data;
        auto& d = t.grad_accumulator(pi).data;
        for (std::size_t i = 0; i < pv.size(); ++i) d[i] += g * 2.0 * weight.data[i] * (pv[i] - target.data[i]);
    });
}

Value mse(Value pred, const Tensor& target)
{
    const Tensor& p = pred.data();
    Tensor w(p.rows, p.cols, 1.0 / static_cast<double>(p.size()));
    return weighted_squared_error(pred, target, w);
}

Value sum_all(Value x)
{
    Tape& tape = tape_of(x);
    double s = 0.0;
    for (double v : x.data().data) s += v;
    const int xi = x.id();
    return tape.record(Tensor(1, 1, s), {x}, [xi](Tape& t, int self) {
        const double g = t.grad(self).data[0];
        for (double& d : t.grad_accumulator(xi).data) d += g;
    });
}

}  // namespace cyberdial::nn
