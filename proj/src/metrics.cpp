#include "p2psim/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "p2psim/kernels.hpp"

namespace p2psim {

double success_rate(std::size_t successes, std::size_t total) {
  if (total == 0) throw std::domain_error("success rate of an empty batch");
  if (successes > total) throw std::invalid_argument("more successes than queries");
  return static_cast<double>(successes) / static_cast<double>(total);
}

double success_rate(std::span<const QueryTrace> batch) {
  const auto ok = static_cast<std::size_t>(
      std::count_if(batch.begin(), batch.end(), [](const QueryTrace& t) { return t.success; }));
  return success_rate(ok, batch.size());
}

UndirectedGraph routing_graph(std::span<const PeerState> peers) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& p : peers) {
    for (const auto& e : p.routing_table.entries()) edges.emplace_back(p.id.value, e.peer.value);
  }
  return UndirectedGraph::from_edges(peers.size(), edges);
}

UndirectedGraph random_graph(std::size_t node_count, std::size_t edge_count, Rng& rng) {
  const std::size_t max_edges = node_count * (node_count - 1) / 2;
  if (edge_count > max_edges) throw std::invalid_argument("too many edges for a simple graph");
  std::set<std::pair<std::uint32_t, std::uint32_t>> chosen;
  while (chosen.size() < edge_count) {
    auto a = static_cast<std::uint32_t>(rng.below(node_count));
    auto b = static_cast<std::uint32_t>(rng.below(node_count));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    chosen.emplace(a, b);
  }
  return UndirectedGraph::from_edges(node_count, {chosen.begin(), chosen.end()});
}

double clustering_coefficient(const UndirectedGraph& graph) {
  if (graph.node_count() < 3) throw std::domain_error("clustering needs at least 3 nodes");
  const auto local = kernels::local_clustering(graph);
  return std::accumulate(local.begin(), local.end(), 0.0) / static_cast<double>(local.size());
}

PathLengthStats avg_path_length(const UndirectedGraph& graph, std::size_t sample_size, Rng& rng) {
  const std::size_t n = graph.node_count();
  PathLengthStats stats;
  if (n < 2) return stats;
  const std::size_t all_pairs = n * (n - 1);
  std::uint64_t total = 0;

  if (sample_size == 0 || sample_size >= all_pairs) {
    std::vector<std::uint32_t> sources(n);
    std::iota(sources.begin(), sources.end(), 0u);
    const auto rows = kernels::hop_rows(graph, sources);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t t = 0; t < n; ++t) {
        if (s == t) continue;
        const int h = rows[s * n + t];
        if (h < 0) {
          ++stats.unreachable;
        } else {
          total += static_cast<std::uint64_t>(h);
          ++stats.pairs;
        }
      }
    }
  } else {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(sample_size);
    while (pairs.size() < sample_size) {
      const auto s = static_cast<std::uint32_t>(rng.below(n));
      const auto t = static_cast<std::uint32_t>(rng.below(n));
      if (s != t) pairs.emplace_back(s, t);
    }
    std::vector<std::uint32_t> sources;
    for (const auto& [s, t] : pairs) sources.push_back(s);
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    const auto rows = kernels::hop_rows(graph, sources);
    for (const auto& [s, t] : pairs) {
      const auto row = static_cast<std::size_t>(
          std::lower_bound(sources.begin(), sources.end(), s) - sources.begin());
      const int h = rows[row * n + t];
      if (h < 0) {
        ++stats.unreachable;
      } else {
        total += static_cast<std::uint64_t>(h);
        ++stats.pairs;
      }
    }
  }
  if (stats.pairs) stats.mean = static_cast<double>(total) / static_cast<double>(stats.pairs);
  return stats;
}

std::vector<std::uint64_t> entry_distance_histogram(std::span<const PeerState> peers,
                                                    const InterestModel& model,
                                                    std::size_t bin_count) {
  if (bin_count == 0) throw std::invalid_argument("histogram needs at least one bin");
  std::vector<std::uint64_t> hist(bin_count, 0);
  const double width = model.max_distance() / static_cast<double>(bin_count);
  for (const auto& p : peers) {
    for (const auto& e : p.routing_table.entries()) {
      const double d = entry_distance(model, e, p.shared_files);
      hist[std::min(bin_count - 1, static_cast<std::size_t>(d / width))] += 1;
    }
  }
  return hist;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::uint64_t to_u64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) throw std::runtime_error("bad integer field '" + s + "'");
  return v;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("bad real field '" + s + "'");
  return v;
}

}  // namespace

void write_csv(std::span<const MetricsSeries> series, std::ostream& out, std::size_t bins) {
  if (!series.empty() && !series.front().batches.empty()) {
    bins = series.front().batches.front().entry_distance_histogram.size();
  }
  bool first = true;
  for (const char* c : kCsvColumns) {
    out << (first ? "" : ",") << c;
    first = false;
  }
  for (std::size_t k = 0; k < bins; ++k) out << ",hist_" << k;
  out << '\n';
  for (const auto& s : series) {
    for (std::size_t b = 0; b < s.batches.size(); ++b) {
      const auto& m = s.batches[b];
      if (m.entry_distance_histogram.size() != bins) {
        throw std::invalid_argument("histogram width differs between batches");
      }
      out << s.mode << ',' << s.fingerprint << ',' << s.seed << ',' << s.replica << ',' << b
          << ',' << m.batch_size << ',' << m.cumulative_queries << ',' << m.successes << ','
          << m.failures << ',' << fixed6(m.success_rate) << ','
          << (m.mean_nop ? fixed6(*m.mean_nop) : std::string()) << ',' << m.revisit_count << ','
          << m.evictions << ',' << m.filtered << ',' << fixed6(m.clustering_coefficient) << ','
          << fixed6(m.avg_path_length) << ',' << m.unreachable_pairs << ','
          << fixed6(m.baseline_clustering) << ',' << fixed6(m.baseline_path_length);
      for (auto h : m.entry_distance_histogram) out << ',' << h;
      out << '\n';
    }
  }
}

void write_csv(std::span<const MetricsSeries> series, const std::string& path, std::size_t bins) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(series, out, bins);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<MetricsSeries> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics CSV is empty");
  const auto header = split_csv_line(line);
  constexpr std::size_t fixed = std::size(kCsvColumns);
  if (header.size() < fixed) throw std::runtime_error("metrics CSV header is too short");
  for (std::size_t i = 0; i < fixed; ++i) {
    if (header[i] != kCsvColumns[i]) {
      throw std::runtime_error("unexpected CSV column '" + header[i] + "'");
    }
  }
  const std::size_t bins = header.size() - fixed;

  std::vector<MetricsSeries> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields");
    }
    const auto seed = to_u64(f[2]);
    const auto replica = static_cast<std::size_t>(to_u64(f[3]));
    if (out.empty() || out.back().mode != f[0] || out.back().seed != seed ||
        out.back().replica != replica) {
      out.push_back(MetricsSeries{f[0], f[1], seed, replica, {}});
    }
    BatchMetrics m;
    m.batch_size = to_u64(f[5]);
    m.cumulative_queries = to_u64(f[6]);
    m.successes = to_u64(f[7]);
    m.failures = to_u64(f[8]);
    m.success_rate = to_double(f[9]);
    if (!f[10].empty()) m.mean_nop = to_double(f[10]);
    m.revisit_count = to_u64(f[11]);
    m.evictions = to_u64(f[12]);
    m.filtered = to_u64(f[13]);
    m.clustering_coefficient = to_double(f[14]);
    m.avg_path_length = to_double(f[15]);
    m.unreachable_pairs = to_u64(f[16]);
    m.baseline_clustering = to_double(f[17]);
    m.baseline_path_length = to_double(f[18]);
    for (std::size_t k = 0; k < bins; ++k) m.entry_distance_histogram.push_back(to_u64(f[fixed + k]));
    out.back().batches.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-replica summaries

namespace {

struct ModeCurve {
  std::string mode;
  std::vector<std::size_t> cumulative;
  std::vector<std::size_t> batch_size;
  std::vector<double> success_sum;
  std::vector<double> nop_sum;
  std::vector<std::size_t> nop_count;
  std::vector<double> clustering_sum;
  std::vector<double> path_sum;
  std::size_t replicas = 0;
};

std::vector<ModeCurve> average_by_mode(std::span<const MetricsSeries> series) {
  std::vector<ModeCurve> curves;
  for (const auto& s : series) {
    auto it = std::find_if(curves.begin(), curves.end(),
                           [&](const ModeCurve& c) { return c.mode == s.mode; });
    if (it == curves.end()) {
      ModeCurve c;
      c.mode = s.mode;
      const auto n = s.batches.size();
      for (const auto& b : s.batches) {
        c.cumulative.push_back(b.cumulative_queries);
        c.batch_size.push_back(b.batch_size);
      }
      c.success_sum.assign(n, 0.0);
      c.nop_sum.assign(n, 0.0);
      c.nop_count.assign(n, 0);
      c.clustering_sum.assign(n, 0.0);
      c.path_sum.assign(n, 0.0);
      curves.push_back(std::move(c));
      it = std::prev(curves.end());
    }
    if (it->cumulative.size() != s.batches.size()) {
      throw std::invalid_argument("replicas of mode '" + s.mode + "' differ in batch count");
    }
    ++it->replicas;
    for (std::size_t b = 0; b < s.batches.size(); ++b) {
      const auto& m = s.batches[b];
      it->success_sum[b] += m.success_rate;
      if (m.mean_nop) {
        it->nop_sum[b] += *m.mean_nop;
        ++it->nop_count[b];
      }
      it->clustering_sum[b] += m.clustering_coefficient;
      it->path_sum[b] += m.avg_path_length;
    }
  }
  return curves;
}

}  // namespace

void write_comparison(std::span<const MetricsSeries> series, std::uint64_t base_seed,
                      const std::string& fingerprint, std::ostream& out) {
  out << "mode,fingerprint,seed,replicas,batch_index,batch_size,cumulative_queries,"
         "success_rate,mean_nop,clustering_coefficient,avg_path_length\n";
  for (const auto& c : average_by_mode(series)) {
    const auto r = static_cast<double>(c.replicas);
    for (std::size_t b = 0; b < c.cumulative.size(); ++b) {
      out << c.mode << ',' << fingerprint << ',' << base_seed << ',' << c.replicas << ',' << b
          << ',' << c.batch_size[b] << ',' << c.cumulative[b] << ','
          << fixed6(c.success_sum[b] / r) << ','
          << (c.nop_count[b] ? fixed6(c.nop_sum[b] / static_cast<double>(c.nop_count[b]))
                             : std::string())
          << ',' << fixed6(c.clustering_sum[b] / r) << ',' << fixed6(c.path_sum[b] / r) << '\n';
    }
  }
}

void write_svg(std::span<const MetricsSeries> series, std::uint64_t base_seed,
               const std::string& fingerprint, std::ostream& out) {
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2"};
  constexpr double width = 640, height = 400, margin = 50;
  const auto curves = average_by_mode(series);
  std::size_t max_x = 1;
  for (const auto& c : curves) {
    if (!c.cumulative.empty()) max_x = std::max(max_x, c.cumulative.back());
  }
  auto px = [&](double x) { return margin + (width - 2 * margin) * x / static_cast<double>(max_x); };
  auto py = [&](double y) { return height - margin - (height - 2 * margin) * y; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<!-- seed=" << base_seed << " fingerprint=" << fingerprint << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << py(0) << "\" x2=\"" << width - margin
      << "\" y2=\"" << py(0) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << py(0) << "\" x2=\"" << margin << "\" y2=\""
      << py(1) << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">queries</text>\n";
  out << "<text x=\"15\" y=\"" << height / 2 << "\" transform=\"rotate(-90 15 " << height / 2
      << ")\" text-anchor=\"middle\">success rate</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const char* color = kColors[i % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (std::size_t b = 0; b < c.cumulative.size(); ++b) {
      out << (b ? " " : "") << fixed6(px(static_cast<double>(c.cumulative[b]))) << ','
          << fixed6(py(c.success_sum[b] / static_cast<double>(c.replicas)));
    }
    out << "\"/>\n";
    out << "<text x=\"" << width - margin + 5 << "\" y=\"" << margin + 15.0 * static_cast<double>(i)
        << "\" fill=\"" << color << "\" font-size=\"11\">" << c.mode << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace p2psim
