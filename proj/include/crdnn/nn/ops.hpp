#pragma once

#include "crdnn/nn/matrix.hpp"

#include <array>
#include <span>

namespace crdnn::nn {

// ---------------------------------------------------------------------------
// Single-window building blocks. The batched layers in layers.hpp share the
// kernels below, so these double as their reference entry points.
// ---------------------------------------------------------------------------

// Same-length 1-D cross-correlation with zero padding. input is time x channels;
// each filter is kernel x channels (kernel odd). Output is time x filters.
Matrix conv1d_forward(const Matrix& input, std::span<const Matrix> filters, const Vector& bias);

struct LstmCellParams {
    // Each gate matrix is hidden x (hidden + input); columns [0, hidden) act on
    // the previous activation, the rest on the current input.
    Matrix w_candidate, w_update, w_forget, w_output;
    Vector b_candidate, b_update, b_forget, b_output;

    static LstmCellParams zeros(Index input, Index hidden);

    Index hidden() const { return w_candidate.rows(); }
    Index input_size() const { return w_candidate.cols() - w_candidate.rows(); }
    std::size_t parameter_count() const;
    void validate() const;
};

struct LstmState {
    Vector cell;
    Vector activation;

    static LstmState zeros(Index hidden);
};

LstmState lstm_step(const LstmCellParams& params, const LstmState& prev, const Vector& x);

// Rows of the result are the activations after each step. The initial state
// defaults to zeros.
Matrix lstm_sequence_forward(const LstmCellParams& params, const Matrix& window);
Matrix lstm_sequence_forward(const LstmCellParams& params, const Matrix& window, const LstmState& initial);

// Row t is [forward a<t>, backward a<t>]; the backward cell runs from the last
// timestep to the first.
Matrix bilstm_sequence_forward(const LstmCellParams& forward, const LstmCellParams& backward,
                               const Matrix& window);

// weights is out x in.
Vector dense_forward(const Matrix& weights, const Vector& bias, const Vector& x);
Vector relu(const Vector& v);
Vector softmax(const Vector& v);

double sigmoid(double x);

// ---------------------------------------------------------------------------
// Batched kernels. Sequences are time-major stacks: row t * batch + b.
// ---------------------------------------------------------------------------

// weight is filters x (kernel * channels) with element [f][k * channels + c].
Matrix conv1d_batched(const Matrix& x, Index steps, Index batch, const Matrix& weight,
                      const double* bias, Index kernel);
// Returns d(input); accumulates into grad_weight / grad_bias.
Matrix conv1d_batched_backward(const Matrix& x, const Matrix& grad_out, Index steps, Index batch,
                               const Matrix& weight, Index kernel, Matrix& grad_weight,
                               double* grad_bias);

// Gate blocks are ordered [candidate, update, forget, output].
struct FusedLstm {
    Matrix wx;    // input x 4*hidden
    Matrix wa;    // hidden x 4*hidden
    Matrix bias;  // 1 x 4*hidden
    Index hidden = 0;
};

FusedLstm fuse_lstm(std::array<const Matrix*, 4> weights, std::array<const double*, 4> biases);

struct LstmTrace {
    Matrix gates;      // post-activation gate values, (steps*batch) x 4*hidden
    Matrix cell;       // (steps*batch) x hidden
    Matrix tanh_cell;  // (steps*batch) x hidden
    Matrix act;        // (steps*batch) x hidden
    Matrix init_act;   // batch x hidden
    Matrix init_cell;  // batch x hidden
};

// Runs the cell over every timestep (last to first when reverse). Returns the
// activation sequence, stored at each row's own timestep.
Matrix lstm_batched(const Matrix& x, Index steps, Index batch, const FusedLstm& w, bool reverse,
                    const Matrix* init_act, const Matrix* init_cell, LstmTrace* trace);

struct FusedLstmGrad {
    Matrix wx, wa, bias;
};

// Backpropagation through time. grad_act holds dL/da<t> for every timestep.
// Accumulates into grad and returns dL/dx.
Matrix lstm_batched_backward(const Matrix& x, Index steps, Index batch, const FusedLstm& w,
                             bool reverse, const LstmTrace& trace, const Matrix& grad_act,
                             FusedLstmGrad& grad);

// Adds the fused gradient back onto the four gate weight/bias gradients.
void unfuse_lstm_grad(const FusedLstmGrad& grad, std::array<Matrix*, 4> weights,
                      std::array<double*, 4> biases);

} // namespace crdnn::nn
