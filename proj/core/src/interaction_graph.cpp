#include "eventcast/interaction_graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "eventcast/io.hpp"

namespace eventcast {

std::vector<InteractionEdge> build_edges(const EventRecord& event) {
  std::unordered_set<std::string> ids;
  ids.reserve(event.posts.size());
  for (const auto& p : event.posts) ids.insert(p.post_id);

  std::vector<const UnifiedPost*> order;
  for (const auto& p : event.posts)
    if (p.parent_id) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const UnifiedPost* a, const UnifiedPost* b) { return chronological_less(*a, *b); });

  std::vector<InteractionEdge> edges;
  edges.reserve(order.size());
  for (const auto* p : order) {
    InteractionEdge e;
    e.src = p->post_id;
    e.dst = *p->parent_id;
    e.kind = p->interaction_kind == InteractionKind::repost ? InteractionKind::repost : InteractionKind::reply;
    e.timestamp_utc = p->timestamp_utc;
    e.dangling = ids.count(e.dst) == 0;
    edges.push_back(std::move(e));
  }
  return edges;
}

std::unordered_set<std::string> replied_targets(std::span<const InteractionEdge> edges) {
  std::unordered_set<std::string> out;
  for (const auto& e : edges) out.insert(e.dst);
  return out;
}

std::optional<double> reply_ratio(std::span<const UnifiedPost> bin_posts,
                                  const std::unordered_set<std::string>& replied_to) {
  if (bin_posts.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (const auto& p : bin_posts)
    if (p.parent_id || replied_to.count(p.post_id) != 0) ++hits;
  return static_cast<double>(hits) / static_cast<double>(bin_posts.size());
}

double percentile(std::vector<double> sample, double q) {
  if (sample.empty()) throw std::invalid_argument("percentile: empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile: q outside [0, 100]");
  std::sort(sample.begin(), sample.end());
  const double pos = q / 100.0 * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sample.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  const double v = sample[lo] + frac * (sample[hi] - sample[lo]);
  return std::clamp(v, sample[lo], sample[hi]);
}

std::vector<ScoredBin> pooled_test_bins(std::span<const EventSeries> series) {
  std::vector<ScoredBin> out;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.bins.size(); ++i)
      if (s.bins[i].split == Split::test && s.bins[i].reply_ratio)
        out.push_back({BinRef{s.event_id, i}, *s.bins[i].reply_ratio});
  return out;
}

std::vector<BinRef> high_interaction_subset(std::span<const ScoredBin> test_bins, double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0))
    throw std::invalid_argument("high_interaction_subset: k outside (0, 100]");
  std::vector<BinRef> out;
  if (test_bins.empty()) return out;
  std::vector<double> ratios;
  ratios.reserve(test_bins.size());
  for (const auto& b : test_bins) ratios.push_back(b.reply_ratio);
  const double threshold = percentile(std::move(ratios), 100.0 - k_percent);
  for (const auto& b : test_bins)
    if (b.reply_ratio >= threshold) out.push_back(b.bin);
  std::sort(out.begin(), out.end());
  return out;
}

std::string edges_to_csv(std::span<const InteractionEdge> edges) {
  std::ostringstream out;
  out << "src,dst,kind,timestamp_utc,dangling\n";
  for (const auto& e : edges)
    out << csv_escape(e.src) << ',' << csv_escape(e.dst) << ',' << to_string(e.kind) << ',' << e.timestamp_utc
        << ',' << (e.dangling ? 1 : 0) << '\n';
  return out.str();
}

void write_edges(std::span<const InteractionEdge> edges, const std::filesystem::path& path) {
  write_file(path, edges_to_csv(edges));
}

std::vector<InteractionEdge> read_edges(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front().rfind("src,dst,kind,timestamp_utc", 0) != 0)
    throw ParseError(path.string() + ": unexpected header");
  std::vector<InteractionEdge> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() < 4) throw ParseError(path.string() + ": short row " + std::to_string(i + 1));
    InteractionEdge e;
    e.src = f[0];
    e.dst = f[1];
    e.kind = parse_interaction_kind(f[2]);
    e.timestamp_utc = std::stoll(f[3]);
    e.dangling = f.size() > 4 && f[4] == "1";
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace eventcast
