#include "crdnn/nn/ops.hpp"

#include "crdnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace crdnn::nn {

std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_shape(const Matrix& m, Index rows, Index cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + shape_string(m));
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

struct TimeRange {
    Index lo;
    Index count;
};

// Output timesteps t for which t + offset is a valid input timestep.
TimeRange overlap(Index steps, Index offset) {
    const Index lo = std::max<Index>(0, -offset);
    const Index hi = std::min<Index>(steps, steps - offset);
    return {lo, std::max<Index>(0, hi - lo)};
}

} // namespace

Matrix conv1d_batched(const Matrix& x, Index steps, Index batch, const Matrix& weight,
                      const double* bias, Index kernel) {
    const Index channels = x.cols();
    const Index filters = weight.rows();
    if (weight.cols() != kernel * channels) {
        throw ShapeError("conv1d: kernel depth " + std::to_string(weight.cols() / std::max<Index>(kernel, 1)) +
                         " does not match input channels " + std::to_string(channels));
    }
    Matrix out(steps * batch, filters);
    for (Index f = 0; f < filters; ++f) out.col(f).setConstant(bias[f]);
    const Index half = kernel / 2;
    for (Index k = 0; k < kernel; ++k) {
        const Index offset = k - half;
        const auto [lo, count] = overlap(steps, offset);
        if (count == 0) continue;
        out.middleRows(lo * batch, count * batch).noalias() +=
            x.middleRows((lo + offset) * batch, count * batch) *
            weight.middleCols(k * channels, channels).transpose();
    }
    return out;
}

Matrix conv1d_batched_backward(const Matrix& x, const Matrix& grad_out, Index steps, Index batch,
                               const Matrix& weight, Index kernel, Matrix& grad_weight,
                               double* grad_bias) {
    const Index channels = x.cols();
    Matrix grad_x = Matrix::Zero(x.rows(), channels);
    const Index half = kernel / 2;
    for (Index k = 0; k < kernel; ++k) {
        const Index offset = k - half;
        const auto [lo, count] = overlap(steps, offset);
        if (count == 0) continue;
        const auto g = grad_out.middleRows(lo * batch, count * batch);
        grad_weight.middleCols(k * channels, channels).noalias() +=
            g.transpose() * x.middleRows((lo + offset) * batch, count * batch);
        grad_x.middleRows((lo + offset) * batch, count * batch).noalias() +=
            g * weight.middleCols(k * channels, channels);
    }
    const Eigen::RowVectorXd colsum = grad_out.colwise().sum();
    for (Index f = 0; f < grad_out.cols(); ++f) grad_bias[f] += colsum(f);
    return grad_x;
}

Matrix conv1d_forward(const Matrix& input, std::span<const Matrix> filters, const Vector& bias) {
    if (filters.empty()) throw ShapeError("conv1d: no filters");
    const Index kernel = filters.front().rows();
    const Index channels = filters.front().cols();
    if (kernel % 2 == 0) throw ShapeError("conv1d: kernel width must be odd");
    for (const auto& f : filters) require_shape(f, kernel, channels, "conv1d filter");
    if (input.cols() != channels) {
        throw ShapeError("conv1d: input has " + std::to_string(input.cols()) +
                         " channels, kernel depth is " + std::to_string(channels));
    }
    if (bias.size() != static_cast<Index>(filters.size())) throw ShapeError("conv1d: bias length");
    if (input.rows() < kernel) throw ShapeError("conv1d: input shorter than kernel");

    Matrix weight(static_cast<Index>(filters.size()), kernel * channels);
    for (std::size_t f = 0; f < filters.size(); ++f) {
        weight.row(static_cast<Index>(f)) =
            Eigen::Map<const Eigen::RowVectorXd>(filters[f].data(), kernel * channels);
    }
    return conv1d_batched(input, input.rows(), 1, weight, bias.data(), kernel);
}

LstmCellParams LstmCellParams::zeros(Index input, Index hidden) {
    LstmCellParams p;
    for (Matrix* w : {&p.w_candidate, &p.w_update, &p.w_forget, &p.w_output}) {
        *w = Matrix::Zero(hidden, hidden + input);
    }
    for (Vector* b : {&p.b_candidate, &p.b_update, &p.b_forget, &p.b_output}) {
        *b = Vector::Zero(hidden);
    }
    return p;
}

std::size_t LstmCellParams::parameter_count() const {
    return static_cast<std::size_t>(4 * (w_candidate.size() + b_candidate.size()));
}

void LstmCellParams::validate() const {
    const Index h = w_candidate.rows();
    const Index cols = w_candidate.cols();
    if (cols <= h) throw ShapeError("lstm: gate matrix must be hidden x (hidden + input)");
    for (const Matrix* w : {&w_update, &w_forget, &w_output}) require_shape(*w, h, cols, "lstm gate weight");
    for (const Vector* b : {&b_candidate, &b_update, &b_forget, &b_output}) {
        if (b->size() != h) throw ShapeError("lstm: gate bias length must equal hidden size");
    }
}

LstmState LstmState::zeros(Index hidden) {
    return {Vector::Zero(hidden), Vector::Zero(hidden)};
}

LstmState lstm_step(const LstmCellParams& params, const LstmState& prev, const Vector& x) {
    params.validate();
    const Index h = params.hidden();
    if (x.size() != params.input_size()) {
        throw ShapeError("lstm_step: input length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(params.input_size()));
    }
    if (prev.cell.size() != h || prev.activation.size() != h) throw ShapeError("lstm_step: state size");

    Vector joined(h + x.size());
    joined << prev.activation, x;
    const Vector candidate = (params.w_candidate * joined + params.b_candidate).array().tanh();
    const Vector update = (params.w_update * joined + params.b_update).unaryExpr(&sigmoid);
    const Vector forget = (params.w_forget * joined + params.b_forget).unaryExpr(&sigmoid);
    const Vector output = (params.w_output * joined + params.b_output).unaryExpr(&sigmoid);

    LstmState next;
    next.cell = update.cwiseProduct(candidate) + forget.cwiseProduct(prev.cell);
    next.activation = output.cwiseProduct(Vector(next.cell.array().tanh()));
    return next;
}

namespace {

FusedLstm fuse_cell(const LstmCellParams& p) {
    return fuse_lstm({&p.w_candidate, &p.w_update, &p.w_forget, &p.w_output},
                     {p.b_candidate.data(), p.b_update.data(), p.b_forget.data(), p.b_output.data()});
}

void check_window(const LstmCellParams& params, const Matrix& window) {
    params.validate();
    if (window.rows() == 0) throw InputError("lstm: empty window");
    if (window.cols() != params.input_size()) {
        throw ShapeError("lstm: window has " + std::to_string(window.cols()) + " features, expected " +
                         std::to_string(params.input_size()));
    }
}

} // namespace

Matrix lstm_sequence_forward(const LstmCellParams& params, const Matrix& window) {
    return lstm_sequence_forward(params, window, LstmState::zeros(params.hidden()));
}

Matrix lstm_sequence_forward(const LstmCellParams& params, const Matrix& window, const LstmState& initial) {
    check_window(params, window);
    const Index h = params.hidden();
    if (initial.cell.size() != h || initial.activation.size() != h) throw ShapeError("lstm: initial state size");
    const Matrix a0 = initial.activation.transpose();
    const Matrix c0 = initial.cell.transpose();
    return lstm_batched(window, window.rows(), 1, fuse_cell(params), false, &a0, &c0, nullptr);
}

Matrix bilstm_sequence_forward(const LstmCellParams& forward, const LstmCellParams& backward,
                               const Matrix& window) {
    if (forward.hidden() != backward.hidden()) {
        throw ShapeError("bilstm: hidden sizes differ between directions (" + std::to_string(forward.hidden()) +
                         " vs " + std::to_string(backward.hidden()) + ")");
    }
    check_window(forward, window);
    check_window(backward, window);
    const Index h = forward.hidden();
    Matrix out(window.rows(), 2 * h);
    out.leftCols(h) = lstm_batched(window, window.rows(), 1, fuse_cell(forward), false, nullptr, nullptr, nullptr);
    out.rightCols(h) = lstm_batched(window, window.rows(), 1, fuse_cell(backward), true, nullptr, nullptr, nullptr);
    return out;
}

Vector dense_forward(const Matrix& weights, const Vector& bias, const Vector& x) {
    if (weights.cols() != x.size() || weights.rows() != bias.size()) {
        throw ShapeError("dense: weights " + shape_string(weights) + " incompatible with input " +
                         std::to_string(x.size()) + " / bias " + std::to_string(bias.size()));
    }
    return weights * x + bias;
}

Vector relu(const Vector& v) { return v.cwiseMax(0.0); }

Vector softmax(const Vector& v) {
    if (v.size() == 0) throw ShapeError("softmax: empty input");
    const Vector e = (v.array() - v.maxCoeff()).exp();
    return e / e.sum();
}

FusedLstm fuse_lstm(std::array<const Matrix*, 4> weights, std::array<const double*, 4> biases) {
    const Index h = weights[0]->rows();
    const Index input = weights[0]->cols() - h;
    FusedLstm f;
    f.hidden = h;
    f.wx.resize(input, 4 * h);
    f.wa.resize(h, 4 * h);
    f.bias.resize(1, 4 * h);
    for (int g = 0; g < 4; ++g) {
        f.wa.middleCols(g * h, h) = weights[g]->leftCols(h).transpose();
        f.wx.middleCols(g * h, h) = weights[g]->rightCols(input).transpose();
        f.bias.middleCols(g * h, h) = Eigen::Map<const Eigen::RowVectorXd>(biases[g], h);
    }
    return f;
}

void unfuse_lstm_grad(const FusedLstmGrad& grad, std::array<Matrix*, 4> weights,
                      std::array<double*, 4> biases) {
    const Index h = grad.wa.rows();
    const Index input = grad.wx.rows();
    for (int g = 0; g < 4; ++g) {
        weights[g]->leftCols(h) += grad.wa.middleCols(g * h, h).transpose();
        weights[g]->rightCols(input) += grad.wx.middleCols(g * h, h).transpose();
        Eigen::Map<Eigen::RowVectorXd>(biases[g], h) += grad.bias.middleCols(g * h, h);
    }
}

Matrix lstm_batched(const Matrix& x, Index steps, Index batch, const FusedLstm& w, bool reverse,
                    const Matrix* init_act, const Matrix* init_cell, LstmTrace* trace) {
    const Index h = w.hidden;
    if (x.cols() != w.wx.rows()) throw ShapeError("lstm: input width mismatch");
    LstmTrace local;
    LstmTrace& tr = trace ? *trace : local;

    tr.gates.noalias() = x * w.wx;
    tr.gates.rowwise() += w.bias.row(0);
    tr.cell.resize(steps * batch, h);
    tr.tanh_cell.resize(steps * batch, h);
    tr.act.resize(steps * batch, h);
    tr.init_act = init_act ? *init_act : Matrix::Zero(batch, h);
    tr.init_cell = init_cell ? *init_cell : Matrix::Zero(batch, h);

    Index prev_t = -1;
    for (Index p = 0; p < steps; ++p) {
        const Index t = reverse ? steps - 1 - p : p;
        const Index row = t * batch;
        const auto a_prev = prev_t < 0 ? tr.init_act.middleRows(0, batch) : tr.act.middleRows(prev_t * batch, batch);
        const auto c_prev = prev_t < 0 ? tr.init_cell.middleRows(0, batch) : tr.cell.middleRows(prev_t * batch, batch);

        auto z = tr.gates.middleRows(row, batch);
        z.noalias() += a_prev * w.wa;
        z.leftCols(h) = z.leftCols(h).array().tanh();
        z.rightCols(3 * h) = (1.0 + (-z.rightCols(3 * h).array()).exp()).inverse();

        const auto cand = z.leftCols(h).array();
        const auto update = z.middleCols(h, h).array();
        const auto forget = z.middleCols(2 * h, h).array();
        const auto output = z.middleCols(3 * h, h).array();

        tr.cell.middleRows(row, batch) = update * cand + forget * c_prev.array();
        tr.tanh_cell.middleRows(row, batch) = tr.cell.middleRows(row, batch).array().tanh();
        tr.act.middleRows(row, batch) = output * tr.tanh_cell.middleRows(row, batch).array();
        prev_t = t;
    }
    return tr.act;
}

Matrix lstm_batched_backward(const Matrix& x, Index steps, Index batch, const FusedLstm& w,
                             bool reverse, const LstmTrace& trace, const Matrix& grad_act,
                             FusedLstmGrad& grad) {
    const Index h = w.hidden;
    if (grad.wx.size() == 0) {
        grad.wx = Matrix::Zero(w.wx.rows(), w.wx.cols());
        grad.wa = Matrix::Zero(w.wa.rows(), w.wa.cols());
        grad.bias = Matrix::Zero(1, 4 * h);
    }
    Matrix dz_all(steps * batch, 4 * h);
    Matrix da_next = Matrix::Zero(batch, h);
    Matrix dc_next = Matrix::Zero(batch, h);
    Matrix da(batch, h);
    Matrix dc(batch, h);

    for (Index p = steps - 1; p >= 0; --p) {
        const Index t = reverse ? steps - 1 - p : p;
        const Index row = t * batch;
        const Index prev_t = p == 0 ? -1 : (reverse ? t + 1 : t - 1);
        const auto a_prev = prev_t < 0 ? trace.init_act.middleRows(0, batch) : trace.act.middleRows(prev_t * batch, batch);
        const auto c_prev = prev_t < 0 ? trace.init_cell.middleRows(0, batch) : trace.cell.middleRows(prev_t * batch, batch);

        const auto g = trace.gates.middleRows(row, batch);
        const auto cand = g.leftCols(h).array();
        const auto update = g.middleCols(h, h).array();
        const auto forget = g.middleCols(2 * h, h).array();
        const auto output = g.middleCols(3 * h, h).array();
        const auto tc = trace.tanh_cell.middleRows(row, batch).array();

        da = grad_act.middleRows(row, batch) + da_next;
        dc = dc_next.array() + da.array() * output * (1.0 - tc.square());

        auto dz = dz_all.middleRows(row, batch);
        dz.leftCols(h) = dc.array() * update * (1.0 - cand.square());
        dz.middleCols(h, h) = dc.array() * cand * update * (1.0 - update);
        dz.middleCols(2 * h, h) = dc.array() * c_prev.array() * forget * (1.0 - forget);
        dz.middleCols(3 * h, h) = da.array() * tc * output * (1.0 - output);

        dc_next = dc.array() * forget;
        grad.wa.noalias() += a_prev.transpose() * dz;
        da_next.noalias() = dz * w.wa.transpose();
    }
    grad.wx.noalias() += x.transpose() * dz_all;
    grad.bias += dz_all.colwise().sum();
    return dz_all * w.wx.transpose();
}

} // namespace crdnn::nn
