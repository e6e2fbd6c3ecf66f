#include "eventcast/text_views.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

#include "eventcast/io.hpp"
#include "eventcast/unicode_text.hpp"

namespace eventcast {

namespace {

const ViewPost& lookup(const ViewTexts& texts, const std::string& id) {
  const auto it = texts.find(id);
  if (it == texts.end()) throw std::invalid_argument("no text for selected post " + id);
  return it->second;
}

std::string truncate(std::string text, std::size_t max_chars) {
  if (scalar_count(text) <= max_chars) return text;
  return scalar_prefix(text, max_chars) + "...";
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i != 0) out += '\n';
    out += lines[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> BinSelection::post_ids() const {
  std::vector<std::string> ids;
  for (const auto& t : threads) {
    ids.push_back(t.main);
    ids.insert(ids.end(), t.replies.begin(), t.replies.end());
  }
  ids.insert(ids.end(), fallback_singletons.begin(), fallback_singletons.end());
  return ids;
}

BinSelection select_posts(std::int64_t bin_start_utc, std::span<const UnifiedPost> bin_posts) {
  BinSelection sel;
  sel.bin_start_utc = bin_start_utc;
  std::vector<const UnifiedPost*> posts;
  posts.reserve(bin_posts.size());
  for (const auto& p : bin_posts) posts.push_back(&p);
  std::sort(posts.begin(), posts.end(), [](const UnifiedPost* a, const UnifiedPost* b) { return chronological_less(*a, *b); });

  std::map<std::string, std::vector<const UnifiedPost*>> children;  // chronological per parent
  for (const auto* p : posts)
    if (p->parent_id) children[*p->parent_id].push_back(p);

  std::vector<const UnifiedPost*> mains;
  for (const auto* p : posts)
    if (!p->parent_id) mains.push_back(p);

  if (mains.empty()) {
    for (std::size_t i = 0; i < posts.size() && i < kMaxThreads; ++i) sel.fallback_singletons.push_back(posts[i]->post_id);
    return sel;
  }

  auto reply_count = [&](const UnifiedPost* p) -> std::size_t {
    const auto it = children.find(p->post_id);
    return it == children.end() ? 0 : it->second.size();
  };
  std::stable_sort(mains.begin(), mains.end(), [&](const UnifiedPost* a, const UnifiedPost* b) {
    const auto ca = reply_count(a);
    const auto cb = reply_count(b);
    if (ca != cb) return ca > cb;
    return chronological_less(*a, *b);
  });

  for (std::size_t i = 0; i < mains.size() && i < kMaxThreads; ++i) {
    Thread t;
    t.main = mains[i]->post_id;
    const auto it = children.find(t.main);
    if (it != children.end())
      for (std::size_t r = 0; r < it->second.size() && r < kMaxRepliesPerThread; ++r)
        t.replies.push_back(it->second[r]->post_id);
    sel.threads.push_back(std::move(t));
  }
  return sel;
}

Pseudonyms Pseudonyms::for_event(const EventRecord& event) {
  std::vector<const UnifiedPost*> posts;
  for (const auto& p : event.posts) posts.push_back(&p);
  std::sort(posts.begin(), posts.end(), [](const UnifiedPost* a, const UnifiedPost* b) { return chronological_less(*a, *b); });
  Pseudonyms out;
  for (const auto* p : posts) {
    const std::string key = p->author_id ? "a:" + *p->author_id : "p:" + p->post_id;
    out.index_.emplace(key, out.index_.size() + 1);
  }
  return out;
}

std::string Pseudonyms::name(const UnifiedPost& post) const {
  const std::string key = post.author_id ? "a:" + *post.author_id : "p:" + post.post_id;
  const auto it = index_.find(key);
  if (it == index_.end()) throw std::invalid_argument("post " + post.post_id + " is not part of the event");
  return "User" + std::to_string(it->second);
}

std::string render_structured(const BinSelection& selection, const ViewTexts& texts, std::size_t max_chars) {
  std::vector<std::string> lines;
  for (const auto& t : selection.threads) {
    const auto& m = lookup(texts, t.main);
    lines.push_back(m.display_name + " said: " + m.text);
    for (const auto& r : t.replies) {
      const auto& p = lookup(texts, r);
      lines.push_back("   >> " + p.display_name + " replied: " + p.text);
    }
  }
  for (const auto& id : selection.fallback_singletons) {
    const auto& p = lookup(texts, id);
    lines.push_back(p.display_name + " said: " + p.text);
  }
  return truncate(join_lines(lines), max_chars);
}

std::string render_flat(const BinSelection& selection, const ViewTexts& texts, std::size_t max_chars) {
  std::vector<std::pair<const ViewPost*, std::string>> posts;
  for (const auto& id : selection.post_ids()) posts.emplace_back(&lookup(texts, id), id);
  std::sort(posts.begin(), posts.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first->timestamp_utc, a.second) < std::tie(b.first->timestamp_utc, b.second);
  });
  std::vector<std::string> lines;
  lines.reserve(posts.size());
  for (const auto& [p, id] : posts) lines.push_back(p->display_name + ": " + p->text);
  return truncate(join_lines(lines), max_chars);
}

std::array<TokenMeta, kTokenSlots> export_token_meta(const BinSelection& selection,
                                                     const std::unordered_map<std::string, InteractionKind>& kinds) {
  std::array<TokenMeta, kTokenSlots> out{};
  for (std::size_t s = 0; s < kTokenSlots; ++s) {
    out[s].slot = s;
    out[s].thread_id = s / (1 + kMaxRepliesPerThread);
    out[s].type_id = s % (1 + kMaxRepliesPerThread) == 0 ? 0 : 1;
  }
  auto fill = [&](std::size_t slot, const std::string& id, int type_id) {
    out[slot].post_id = id;
    out[slot].type_id = type_id;
    out[slot].valid = true;
  };
  const std::size_t stride = 1 + kMaxRepliesPerThread;
  for (std::size_t j = 0; j < selection.threads.size() && j < kMaxThreads; ++j) {
    fill(j * stride, selection.threads[j].main, 0);
    for (std::size_t r = 0; r < selection.threads[j].replies.size() && r < kMaxRepliesPerThread; ++r)
      fill(j * stride + 1 + r, selection.threads[j].replies[r], 1);
  }
  for (std::size_t j = 0; j < selection.fallback_singletons.size() && j < kMaxThreads; ++j) {
    const auto& id = selection.fallback_singletons[j];
    const auto it = kinds.find(id);
    const bool is_root = it == kinds.end() || it->second == InteractionKind::root;
    fill(j * stride, id, is_root ? 0 : 1);
  }
  return out;
}

std::vector<BinView> build_views(const EventRecord& event, const EventSeries& series) {
  std::vector<BinView> views;
  if (series.bins.empty()) return views;
  const auto pseudonyms = Pseudonyms::for_event(event);
  const std::int64_t width = width_seconds(series.granularity);
  const auto [span_start, span_end] = series_span(series);

  std::vector<std::vector<UnifiedPost>> grouped(series.size());
  ViewTexts texts;
  std::unordered_map<std::string, InteractionKind> kinds;
  for (const auto& p : event.posts) {
    if (!p.sentiment || p.timestamp_utc < span_start || p.timestamp_utc >= span_end) continue;
    grouped[static_cast<std::size_t>((assign_bin(p.timestamp_utc, series.granularity) - span_start) / width)].push_back(p);
    texts[p.post_id] = ViewPost{pseudonyms.name(p), collapse_white_space(p.text), p.timestamp_utc};
    kinds[p.post_id] = p.interaction_kind;
  }

  views.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    BinView v;
    v.bin_start_utc = series.bins[i].bin_start_utc;
    const auto sel = select_posts(v.bin_start_utc, grouped[i]);
    v.flat = render_flat(sel, texts);
    v.structured = render_structured(sel, texts);
    v.tokens = export_token_meta(sel, kinds);
    views.push_back(std::move(v));
  }
  return views;
}

nlohmann::json to_json(const BinView& view) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : view.tokens) {
    tokens.push_back({{"slot", t.slot},
                      {"post_id", t.post_id ? nlohmann::json(*t.post_id) : nlohmann::json(nullptr)},
                      {"type_id", t.type_id},
                      {"thread_id", t.thread_id},
                      {"valid", t.valid}});
  }
  return {{"bin_start_utc", format_iso8601(view.bin_start_utc)},
          {"flat", view.flat},
          {"structured", view.structured},
          {"tokens", std::move(tokens)}};
}

std::string views_to_jsonl(std::span<const BinView> views) {
  std::string out;
  for (const auto& v : views) {
    out += to_json(v).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write_views(std::span<const BinView> views, const std::filesystem::path& path) {
  write_file(path, views_to_jsonl(views));
}

std::vector<BinView> read_views(const std::filesystem::path& path) {
  std::vector<BinView> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      BinView v;
      const auto ts = parse_timestamp(j.at("bin_start_utc").get<std::string>());
      if (!ts) throw ParseError(path.string() + ": bad bin_start_utc");
      v.bin_start_utc = *ts;
      v.flat = j.at("flat").get<std::string>();
      v.structured = j.at("structured").get<std::string>();
      const auto& tokens = j.at("tokens");
      if (tokens.size() != kTokenSlots) throw ParseError(path.string() + ": expected 9 token slots");
      for (std::size_t s = 0; s < kTokenSlots; ++s) {
        const auto& t = tokens[s];
        v.tokens[s].slot = t.at("slot").get<std::size_t>();
        if (!t.at("post_id").is_null()) v.tokens[s].post_id = t.at("post_id").get<std::string>();
        v.tokens[s].type_id = t.at("type_id").get<int>();
        v.tokens[s].thread_id = t.at("thread_id").get<std::size_t>();
        v.tokens[s].valid = t.at("valid").get<bool>();
      }
      out.push_back(std::move(v));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace eventcast
