#include "fairbn/sampler.hpp"

#include <cstdio>

namespace fairbn {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

struct Plan {
  std::vector<VarIndex> order;
  std::vector<std::vector<std::pair<VarIndex, std::size_t>>> strides;  // per variable: (parent, stride)
};

Plan plan_for(const Network& net) {
  Plan p;
  p.order.assign(net.topological_order().begin(), net.topological_order().end());
  p.strides.resize(net.size());
  for (VarIndex v = 0; v < net.size(); ++v) {
    const Cpt& cpt = net.cpt(v);
    std::size_t stride = 1;
    for (std::size_t i = cpt.parents().size(); i-- > 0;) {
      p.strides[v].emplace_back(cpt.parents()[i], stride);
      stride *= cpt.parent_cardinalities()[i];
    }
  }
  return p;
}

void draw(const Network& net, const Plan& plan, std::uint64_t seed, std::size_t r, StateIndex* out) {
  std::uint64_t state = splitmix64(seed + (static_cast<std::uint64_t>(r) + 1) * 0x9E3779B97F4A7C15ULL);
  for (VarIndex v : plan.order) {
    const Cpt& cpt = net.cpt(v);
    std::size_t row = 0;
    for (auto [p, stride] : plan.strides[v]) row += stride * static_cast<std::size_t>(out[p]);
    const std::uint64_t x = splitmix64(state);
    state += 0x9E3779B97F4A7C15ULL;
    const double u = static_cast<double>(x >> 11) * 0x1.0p-53;
    const auto probs = cpt.row(row);
    // Rounding can leave the cumulative sum just under u; fall back to the last state with mass.
    std::size_t pick = probs.size();
    double cum = 0.0;
    for (std::size_t s = 0; s < probs.size(); ++s) {
      cum += probs[s];
      if (u < cum) {
        pick = s;
        break;
      }
    }
    if (pick == probs.size()) {
      pick = probs.size() - 1;
      while (pick > 0 && probs[pick] == 0.0) --pick;
    }
    out[v] = static_cast<StateIndex>(pick);
  }
}

}  // namespace

std::vector<StateIndex> sample_codes(const Network& net, std::size_t count, std::uint64_t seed, Exec exec) {
  const std::size_t n = net.size();
  const Plan plan = plan_for(net);
  std::vector<StateIndex> codes(count * n);
  if (exec == Exec::serial) {
    for (std::size_t r = 0; r < count; ++r) draw(net, plan, seed, r, codes.data() + r * n);
    return codes;
  }
  const auto total = static_cast<long long>(count);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < total; ++r) {
    draw(net, plan, seed, static_cast<std::size_t>(r), codes.data() + static_cast<std::size_t>(r) * n);
  }
  return codes;
}

Dataset sample(const Network& net, const SampleRequest& req, Exec exec) {
  if (req.count == 0) throw Error(ErrorKind::InvalidDocument, "sample count must be at least 1");
  std::vector<VarIndex> cols;
  if (req.columns.empty()) {
    for (VarIndex v = 0; v < net.size(); ++v) cols.push_back(v);
  } else {
    for (const auto& name : req.columns) cols.push_back(net.index_of(name));
  }
  const auto codes = sample_codes(net, req.count, req.seed, exec);
  Dataset data;
  for (VarIndex v : cols) data.columns.push_back({net.variable(v).name, ColumnKind::categorical, net.variable(v).states});
  data.records.resize(req.count);
  const std::size_t n = net.size();
  for (std::size_t r = 0; r < req.count; ++r) {
    auto& rec = data.records[r];
    rec.reserve(cols.size());
    for (VarIndex v : cols) rec.push_back(net.variable(v).states[static_cast<std::size_t>(codes[r * n + v])]);
  }
  data.provenance.source = std::string("sampled (") + kGeneratorName + ", seed " + std::to_string(req.seed) + ")";
  data.provenance.rows_read = req.count;
  return data;
}

std::string network_hash(const Network& net) {
  const std::string text = to_json(net.to_spec()).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json sample_manifest(const Network& net, const SampleRequest& req) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["generator"] = kGeneratorName;
  doc["network_hash"] = network_hash(net);
  doc["seed"] = req.seed;
  doc["count"] = req.count;
  Json cols = Json::array();
  if (req.columns.empty()) {
    for (const auto& v : net.variables()) cols.push_back(v.name);
  } else {
    for (const auto& c : req.columns) cols.push_back(c);
  }
  doc["columns"] = cols;
  return doc;
}

}  // namespace fairbn
