#include "fairbn/kernels.hpp"

#include <omp.h>

namespace fairbn::kernels {

void decode_joint(const Network& net, std::size_t index, Assignment& out) {
  for (std::size_t v = net.size(); v-- > 0;) {
    const auto card = net.variable(v).cardinality();
    out[v] = static_cast<StateIndex>(index % card);
    index /= card;
  }
}

namespace {

double joint_at(const Network& net, const Assignment& a) {
  double p = 1.0;
  for (VarIndex v = 0; v < net.size(); ++v) {
    const Cpt& cpt = net.cpt(v);
    p *= cpt(cpt.row_index(a), a[v]);
  }
  return p;
}

}  // namespace

std::vector<double> joint_table(const Network& net, Exec exec) {
  const std::size_t n = net.joint_size();
  std::vector<double> out(n);
  if (exec == Exec::serial) {
    Assignment a(net.size());
    for (std::size_t i = 0; i < n; ++i) {
      decode_joint(net, i, a);
      out[i] = joint_at(net, a);
    }
    return out;
  }
  const auto chunks = static_cast<long long>((n + kChunk - 1) / kChunk);
#pragma omp parallel
  {
    Assignment a(net.size());
#pragma omp for schedule(static)
    for (long long c = 0; c < chunks; ++c) {
      const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
      const std::size_t hi = std::min(n, lo + kChunk);
      for (std::size_t i = lo; i < hi; ++i) {
        decode_joint(net, i, a);
        out[i] = joint_at(net, a);
      }
    }
  }
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace fairbn::kernels
