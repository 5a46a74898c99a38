#pragma once

#include <cstddef>
#include <span>

namespace latentpatch::kernels {

// Row-major out[m x n] = a[m x k] * b[k x n].
void matmul(std::span<const float> a, std::span<const float> b,
            std::span<float> out, std::size_t m, std::size_t k, std::size_t n);

// y = W x with W stored row-major as [y.size() x x.size()].
void linear(std::span<const float> weight, std::span<const float> x,
            std::span<float> y);

// Numerically stable softmax; the normaliser is accumulated in double.
void softmax(std::span<const float> logits, std::span<float> out);

void rms_norm(std::span<const float> x, std::span<const float> gain,
              float eps, std::span<float> out);

void layer_norm(std::span<const float> x, std::span<const float> gain,
                std::span<const float> bias, float eps, std::span<float> out);

/// Rotates consecutive pairs (2p, 2p+1) of one head vector by
/// position * base^(-2p / head_dim). Each pair keeps its norm.
void rotary_position_transform(std::span<float> head, std::size_t position,
                               float base = 10000.0f);

float silu(float x);
float gelu(float x);

// down(silu(gate x) * up x); gate/up are [d_ff x d], down is [d x d_ff].
void gated_mlp(std::span<const float> x, std::span<const float> w_gate,
               std::span<const float> w_up, std::span<const float> w_down,
               std::span<float> out);

// w_out(gelu(w_in x)); w_in is [d_ff x d], w_out is [d x d_ff].
void plain_mlp(std::span<const float> x, std::span<const float> w_in,
               std::span<const float> w_out, std::span<float> out);

bool all_finite(std::span<const float> x);

}  // namespace latentpatch::kernels
