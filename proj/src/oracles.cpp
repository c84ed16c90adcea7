#include "dsum/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dsum {

void ValueAssignment::validate() const {
  if (n < 1 || int64_t(val.size()) != int64_t(n) + 1)
    throw ConfigError("value assignment size mismatch");
  for (int v = 1; v <= n; ++v)
    if (val[v] != kNullValue && (val[v] < 1 || val[v] > N))
      throw ConfigError("value out of [1, N] at node " + std::to_string(v));
}

ValueAssignment read_instance(const std::string& path, int n, int64_t N) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open instance: " + path);
  int max_id = 0;
  std::vector<std::pair<int, int64_t>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int id;
    int64_t value;
    if (!(ls >> id >> value)) throw ConfigError("bad instance line: " + line);
    pairs.push_back({id, value});
    max_id = std::max(max_id, id);
  }
  if (n <= 0) n = max_id;
  auto a = ValueAssignment::empty(n, N);
  for (auto [id, value] : pairs) {
    if (id < 1 || id > n) throw ConfigError("instance node id out of range");
    a.val[id] = value;
    a.N = std::max(a.N, value);
  }
  if (N > 0) a.N = N;
  a.validate();
  return a;
}

void write_instance(const ValueAssignment& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for write: " + path);
  for (int v = 1; v <= a.n; ++v)
    if (!a.is_null(v)) out << v << " " << a.val[v] << "\n";
}

int64_t FrequencyVector::f1() const {
  int64_t s = 0;
  for (auto& [value, count] : f) s += count;
  return s;
}

i128 FrequencyVector::moment(int p) const {
  if (p < 0 || p > 6) throw ConfigError("oracle moment supports 0 <= p <= 6");
  if (p == 0) return i128(f0());
  i128 total = 0;
  for (auto& [value, count] : f) {
    i128 term = 1;
    for (int i = 0; i < p; ++i) term *= i128(count);
    total += term;
  }
  return total;
}

double FrequencyVector::entropy() const {
  int64_t F1 = f1();
  if (F1 == 0) return 0.0;
  double h = 0.0;
  for (auto& [value, count] : f) {
    double q = double(count) / double(F1);
    h -= q * std::log(q);
  }
  return h;
}

std::vector<std::pair<int64_t, int64_t>> FrequencyVector::top_k(int k) const {
  std::vector<std::pair<int64_t, int64_t>> items(f.begin(), f.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (int64_t(items.size()) > k) items.resize(size_t(k));
  return items;
}

FrequencyVector exact_stats(const ValueAssignment& a) {
  FrequencyVector fv;
  for (int v = 1; v <= a.n; ++v) {
    if (!a.is_null(v)) {
      fv.f[a.val[v]] += 1;
      fv.z += 1;
    }
  }
  return fv;
}

std::vector<std::pair<int64_t, double>> lp_distribution(const ValueAssignment& a,
                                                        int p) {
  auto fv = exact_stats(a);
  if (fv.f.empty()) throw ConfigError("lp_distribution on empty support");
  i128 fp = fv.moment(p);
  if (fp <= 0) throw ConfigError("lp_distribution requires F_p > 0");
  double denom = double(fp);
  std::vector<std::pair<int64_t, double>> out;
  out.reserve(fv.f.size());
  for (auto& [value, count] : fv.f) {
    i128 term = 1;
    for (int i = 0; i < p; ++i) term *= i128(count);
    out.push_back({value, double(term) / denom});
  }
  return out;
}

}  // namespace dsum
