#include "eventcast/annotation.hpp"

#include <httplib.h>
#include <sodium.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>

#include "eventcast/io.hpp"
#include "eventcast/unicode_text.hpp"

namespace eventcast {

using nlohmann::json;

namespace {

constexpr std::string_view kPlaceholder = "{text}";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

void AnnotatorConfig::validate() const {
  if (count_occurrences(prompt_template, kPlaceholder) != 1) {
    throw std::invalid_argument("prompt template must contain exactly one {text} placeholder");
  }
  if (max_in_flight == 0) throw std::invalid_argument("max_in_flight must be at least 1");
}

std::string render_prompt(std::string_view prompt_template, std::string_view text) {
  const std::size_t pos = prompt_template.find(kPlaceholder);
  if (pos == std::string_view::npos) throw std::invalid_argument("prompt template has no {text} placeholder");
  std::string out;
  out.reserve(prompt_template.size() + text.size());
  out.append(prompt_template.substr(0, pos));
  out.append(text);
  out.append(prompt_template.substr(pos + kPlaceholder.size()));
  return out;
}

std::string prompt_hash(std::string_view prompt_template) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
  std::array<unsigned char, 16> digest{};
  crypto_generichash(digest.data(), digest.size(), reinterpret_cast<const unsigned char*>(prompt_template.data()),
                     prompt_template.size(), nullptr, 0);
  return to_hex(digest.data(), digest.size());
}

// ---------------------------------------------------------------------------
// HTTP transport

HttpCompletionService::HttpCompletionService(AnnotatorConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("annotator endpoint must be an http URL: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpCompletionService::extract_completion(const json& body) {
  if (!body.is_object()) throw std::runtime_error("completion response is not a JSON object");
  if (auto it = body.find("text"); it != body.end() && it->is_string()) return it->get<std::string>();
  if (auto it = body.find("response"); it != body.end() && it->is_string()) return it->get<std::string>();
  if (auto it = body.find("choices"); it != body.end() && it->is_array() && !it->empty()) {
    const json& first = it->front();
    if (auto t = first.find("text"); t != first.end() && t->is_string()) return t->get<std::string>();
    if (auto m = first.find("message"); m != first.end() && m->is_object()) {
      if (auto c = m->find("content"); c != m->end() && c->is_string()) return c->get<std::string>();
    }
  }
  throw std::runtime_error("completion response carries no text field");
}

std::string HttpCompletionService::complete(const std::string& prompt) {
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());

  json request = config_.decoding.is_object() ? config_.decoding : json::object();
  request["model"] = config_.model_name;
  request["prompt"] = prompt;
  auto response = client.Post(path_, request.dump(), "application/json");
  if (!response) throw std::runtime_error("annotator request failed: " + httplib::to_string(response.error()));
  if (response->status != 200) {
    throw std::runtime_error("annotator returned HTTP " + std::to_string(response->status));
  }
  return extract_completion(json::parse(response->body));
}

// ---------------------------------------------------------------------------
// annotate

std::optional<Sentiment> parse_model_response(std::string_view response) {
  std::string word = trim(response);
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (word == "positive") return Sentiment::positive;
  if (word == "neutral") return Sentiment::neutral;
  if (word == "negative") return Sentiment::negative;
  return std::nullopt;
}

SentimentScore annotate(const UnifiedPost& post, const AnnotatorConfig& config, CompletionService& service) {
  if (trim(post.text).empty()) throw std::invalid_argument("annotate: empty post text");
  const std::string prompt = render_prompt(config.prompt_template, post.text);
  std::string last_problem;
  for (std::size_t attempt = 0; attempt <= config.max_retries; ++attempt) {
    try {
      const std::string response = service.complete(prompt);
      if (auto label = parse_model_response(response)) return SentimentScore(*label);
      last_problem = "unparseable response '" + response + "'";
    } catch (const std::exception& e) {
      last_problem = e.what();
    }
  }
  throw AnnotationFailure("post " + post.post_id + ": " + last_problem);
}

// ---------------------------------------------------------------------------
// Label cache

LabelCache LabelCache::load(const std::filesystem::path& path) {
  LabelCache cache;
  if (!std::filesystem::exists(path)) return cache;
  for (const auto& line : read_lines(path)) {
    if (trim(line).empty()) continue;
    const json j = json::parse(line);
    LabelRecord r;
    r.post_id = j.at("post_id").get<std::string>();
    r.label = map_label(j.at("label").get<std::string>());
    r.model_name = j.value("model_name", "");
    r.prompt_hash = j.value("prompt_hash", "");
    cache.put(std::move(r));
  }
  return cache;
}

void LabelCache::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& [id, r] : records_) {
    json j{{"post_id", r.post_id}, {"label", to_string(r.label)}, {"model_name", r.model_name},
           {"prompt_hash", r.prompt_hash}};
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

std::optional<Sentiment> LabelCache::find(const std::string& post_id) const {
  auto it = records_.find(post_id);
  if (it == records_.end()) return std::nullopt;
  return it->second.label;
}

std::optional<Sentiment> LabelCache::find(const std::string& post_id, const std::string& model_name,
                                          const std::string& hash) const {
  auto it = records_.find(post_id);
  if (it == records_.end() || it->second.model_name != model_name || it->second.prompt_hash != hash) {
    return std::nullopt;
  }
  return it->second.label;
}

void LabelCache::put(LabelRecord record) {
  const std::string key = record.post_id;
  records_.insert_or_assign(key, std::move(record));
}

AnnotationSummary annotate_corpus(const std::vector<EventRecord>& events, const AnnotatorConfig& config,
                                  CompletionService& service, LabelCache& cache) {
  config.validate();
  const std::string hash = prompt_hash(config.prompt_template);
  AnnotationSummary summary;

  std::vector<const UnifiedPost*> pending;
  for (const auto& event : events) {
    for (const auto& post : event.posts) {
      if (cache.find(post.post_id, config.model_name, hash)) {
        ++summary.cached;
      } else {
        pending.push_back(&post);
      }
    }
  }

  std::vector<std::optional<Sentiment>> results(pending.size());
  parallel_for(pending.size(), config.max_in_flight, [&](std::size_t i) {
    try {
      results[i] = annotate(*pending[i], config, service).label();
    } catch (const AnnotationFailure& e) {
      spdlog::warn("annotation failed: {}", e.what());
    }
  });

  // Joined back in corpus order so the cache file is independent of scheduling.
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (!results[i]) {
      ++summary.failed;
      continue;
    }
    cache.put({pending[i]->post_id, *results[i], config.model_name, hash});
    ++summary.annotated;
  }
  return summary;
}

std::size_t apply_labels(std::vector<EventRecord>& events, const LabelCache& cache) {
  std::size_t dropped = 0;
  for (auto& event : events) {
    std::vector<UnifiedPost> labeled;
    labeled.reserve(event.posts.size());
    for (auto& post : event.posts) {
      if (auto label = cache.find(post.post_id)) {
        post.sentiment = label;
        labeled.push_back(std::move(post));
      } else if (post.sentiment) {
        labeled.push_back(std::move(post));
      } else {
        ++dropped;
      }
    }
    event.posts = std::move(labeled);
  }
  return dropped;
}

// ---------------------------------------------------------------------------
// Statistics

double aggregation_noise_bound(double c_t, double alpha, double kappa_t) {
  if (!(c_t >= 1.0)) throw std::domain_error("aggregation_noise_bound: c_t must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::domain_error("aggregation_noise_bound: alpha outside [0, 1]");
  if (!(kappa_t >= 1.0)) throw std::domain_error("aggregation_noise_bound: kappa_t must be at least 1");
  return std::sqrt(4.0 * alpha * kappa_t / c_t);
}

json VerificationReport::to_json() const {
  json f1 = json::object();
  for (const auto& [cls, v] : per_class_f1) f1[std::string(eventcast::to_string(cls))] = v;
  json strata = json::array();
  for (const auto& [key, acc] : per_stratum_accuracy) {
    strata.push_back({{"category", eventcast::to_string(key.first)},
                      {"class", eventcast::to_string(key.second)},
                      {"accuracy", acc ? json(*acc) : json(nullptr)}});
  }
  return {{"kappa", kappa},
          {"overall_agreement", overall_agreement},
          {"per_class_f1", f1},
          {"per_stratum_accuracy", strata},
          {"bias_mu", bias_mu}};
}

VerificationReport verification_report(std::span<const VerificationRecord> records) {
  if (records.empty()) throw std::invalid_argument("verification_report: no records");
  VerificationReport report;

  std::vector<Sentiment> a;
  std::vector<Sentiment> b;
  a.reserve(records.size());
  b.reserve(records.size());
  std::size_t agree = 0;
  double bias_sum = 0.0;
  for (const auto& r : records) {
    a.push_back(r.human_a);
    b.push_back(r.human_b);
    if (r.llm == r.consensus) ++agree;
    bias_sum += score(r.llm) - score(r.consensus);
  }
  const double n = static_cast<double>(records.size());
  report.kappa = cohens_kappa(a, b);
  report.overall_agreement = static_cast<double>(agree) / n;
  report.bias_mu = bias_sum / n;

  for (Sentiment cls : kAllSentiments) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
      const bool predicted = r.llm == cls;
      const bool actual = r.consensus == cls;
      if (predicted && actual) ++tp;
      if (predicted && !actual) ++fp;
      if (!predicted && actual) ++fn;
    }
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    report.per_class_f1[cls] = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }

  for (Category cat : kAllCategories) {
    for (Sentiment cls : kAllSentiments) {
      std::size_t total = 0, correct = 0;
      for (const auto& r : records) {
        if (r.category != cat || r.llm != cls) continue;
        ++total;
        if (r.llm == r.consensus) ++correct;
      }
      report.per_stratum_accuracy[{cat, cls}] =
          total == 0 ? std::nullopt : std::optional<double>(static_cast<double>(correct) / static_cast<double>(total));
    }
  }
  return report;
}

std::vector<VerificationRecord> read_verification_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty verification file");
  const auto header = split_csv_line(lines.front());
  auto column = [&](std::string_view name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(path.string() + ": missing column " + std::string(name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column("post_id"), c_llm = column("llm"), c_a = column("human_a"),
                    c_b = column("human_b"), c_cons = column("consensus"), c_cat = column("category");
  std::vector<VerificationRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() < header.size()) throw ParseError(path.string() + ": short row " + std::to_string(i + 1));
    records.push_back({f[c_id], map_label(trim(f[c_llm])), map_label(trim(f[c_a])), map_label(trim(f[c_b])),
                       map_label(trim(f[c_cons])), parse_category(trim(f[c_cat]))});
  }
  return records;
}

}  // namespace eventcast
