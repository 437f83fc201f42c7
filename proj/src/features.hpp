#pragma once

#include "sim.hpp"
#include "tensor.hpp"

namespace gfs {

// Column-major batch views of a TransmissionBatch for the networks:
// preamble [2*N_ZC x B], packed data symbols [2K x N_d*B] (column i*B + b
// holds symbol i of frame b) and labels [N_R x B].
struct BatchTensors {
  Tensor<float> y_p;
  Tensor<float> y_d_packed;
  Tensor<float> labels;
  size_t batch = 0;
};

inline BatchTensors to_tensors(const TransmissionBatch& batch, uint32_t n_d,
                               uint32_t K) {
  const size_t B = batch.frames.size();
  if (B == 0) throw InvalidArgument("empty batch");
  const size_t p_dim = batch.y_p_real[0].size();
  const size_t n_r = batch.labels[0].size();
  BatchTensors t;
  t.batch = B;
  t.y_p = Tensor<float>(p_dim, B);
  t.y_d_packed = Tensor<float>(2 * K, static_cast<size_t>(n_d) * B);
  t.labels = Tensor<float>(n_r, B);
  for (size_t b = 0; b < B; ++b) {
    for (size_t r = 0; r < p_dim; ++r) t.y_p.at(r, b) = batch.y_p_real[b][r];
    for (size_t r = 0; r < n_r; ++r) t.labels.at(r, b) = batch.labels[b][r];
    const auto& yd = batch.y_d_real[b];  // symbol-major, 2K per symbol
    for (uint32_t i = 0; i < n_d; ++i)
      for (uint32_t r = 0; r < 2 * K; ++r)
        t.y_d_packed.at(r, static_cast<size_t>(i) * B + b) = yd[i * 2 * K + r];
  }
  return t;
}

}  // namespace gfs
