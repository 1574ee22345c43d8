// Benchmark of the OpenMP tensor kernels against their serial reference
// implementations, on shapes representative of one training step (batch 200,
// comlen 13, sequence length 100, rnndims 256). Every kernel writes each
// output element from exactly one thread in a fixed reduction order, so the
// parallel and serial results must be bitwise identical; the benchmark
// verifies that along the way.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "csum/kernels.hpp"
#include "csum/rng.hpp"
#include "csum/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using csum::Rng;
using csum::Tensor;

namespace {

Tensor random_tensor(std::vector<int> dims, Rng& rng) {
  Tensor t(std::move(dims));
  for (float& v : t.raw()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.raw().size() != b.raw().size()) return false;
  for (std::size_t i = 0; i < a.raw().size(); ++i)
    if (a.raw()[i] != b.raw()[i]) return false;
  return true;
}

template <class Fn>
double time_ms(int repeats, Fn&& fn) {
  // one warm-up run, then the best of `repeats` timed runs
  fn();
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

int failures = 0;

void report(const std::string& name, const std::string& shape, double serial_ms,
            double parallel_ms, bool identical) {
  std::printf("%-14s %-28s serial %8.3f ms   parallel %8.3f ms   x%5.2f   %s\n", name.c_str(),
              shape.c_str(), serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0,
              identical ? "bitwise-identical" : "MISMATCH");
  if (!identical) ++failures;
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  Rng rng(42);

#ifdef _OPENMP
  std::printf("OpenMP: %d thread(s)\n", omp_get_max_threads());
#else
  std::printf("OpenMP: compiled out (serial build)\n");
#endif
  std::printf("best of %d runs per kernel\n\n", repeats);

  {
    // the output projection: flattened decoder states x comment vocabulary
    Tensor a = random_tensor({200, 3328}, rng);
    Tensor b = random_tensor({3328, 1000}, rng);
    Tensor s({200, 1000}), p({200, 1000});
    double ts = time_ms(repeats, [&] { csum::kernels::serial::matmul_nn(a, b, s); });
    double tp = time_ms(repeats, [&] { csum::kernels::matmul_nn(a, b, p); });
    report("matmul_nn", "[200,3328]x[3328,1000]", ts, tp, bitwise_equal(s, p));
  }
  {
    // dense backward wrt input: d_out x W^T
    Tensor a = random_tensor({2600, 256}, rng);
    Tensor b = random_tensor({768, 256}, rng);
    Tensor s({2600, 768}), p({2600, 768});
    double ts = time_ms(repeats, [&] { csum::kernels::serial::matmul_nt(a, b, s); });
    double tp = time_ms(repeats, [&] { csum::kernels::matmul_nt(a, b, p); });
    report("matmul_nt", "[2600,256]x[768,256]^T", ts, tp, bitwise_equal(s, p));
  }
  {
    // dense backward wrt weights: X^T x d_out
    Tensor a = random_tensor({2600, 768}, rng);
    Tensor b = random_tensor({2600, 256}, rng);
    Tensor s({768, 256}), p({768, 256});
    double ts = time_ms(repeats, [&] { csum::kernels::serial::matmul_tn(a, b, s); });
    double tp = time_ms(repeats, [&] { csum::kernels::matmul_tn(a, b, p); });
    report("matmul_tn", "[2600,768]^T x[2600,256]", ts, tp, bitwise_equal(s, p));
  }
  {
    // attention scores: decoder states x encoder states over the shared width
    Tensor a = random_tensor({200, 13, 256}, rng);
    Tensor b = random_tensor({200, 100, 256}, rng);
    Tensor s({200, 13, 100}), p({200, 13, 100});
    double ts = time_ms(repeats, [&] { csum::kernels::serial::batched_dot(a, b, 2, 2, s); });
    double tp = time_ms(repeats, [&] { csum::kernels::batched_dot(a, b, 2, 2, p); });
    report("batched_dot", "[200,13,256]x[200,100,256]", ts, tp, bitwise_equal(s, p));
  }
  {
    // attention context: weights x encoder states over the sequence axis
    Tensor a = random_tensor({200, 13, 100}, rng);
    Tensor b = random_tensor({200, 100, 256}, rng);
    Tensor s({200, 13, 256}), p({200, 13, 256});
    double ts = time_ms(repeats, [&] { csum::kernels::serial::batched_dot(a, b, 2, 1, s); });
    double tp = time_ms(repeats, [&] { csum::kernels::batched_dot(a, b, 2, 1, p); });
    report("batched_dot", "[200,13,100]x[200,100,256]", ts, tp, bitwise_equal(s, p));
  }
  {
    // next-word distributions over a 10k vocabulary
    Tensor x = random_tensor({2600, 10000}, rng);
    Tensor s({2600, 10000}), p({2600, 10000});
    double ts = time_ms(repeats, [&] { csum::kernels::serial::softmax_rows(x, s); });
    double tp = time_ms(repeats, [&] { csum::kernels::softmax_rows(x, p); });
    report("softmax_rows", "[2600,10000]", ts, tp, bitwise_equal(s, p));
  }

  if (failures) {
    std::printf("\n%d kernel(s) diverged from the serial reference\n", failures);
    return 1;
  }
  std::printf("\nall kernels bitwise-identical to the serial reference\n");
  return 0;
}
