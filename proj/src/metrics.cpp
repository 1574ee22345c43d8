#include "csum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace csum {

namespace {

constexpr int kMaxOrder = 4;
constexpr double kEpsilonCount = 0.1;

/// Joined-token n-gram keys; '\x1f' cannot occur in tokens read from
/// space-separated files.
std::map<std::string, long> ngram_counts(const TokenSeq& seq, int n) {
  std::map<std::string, long> counts;
  if (static_cast<int>(seq.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::string key = seq[i];
    for (int k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += seq[i + static_cast<std::size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

struct PooledStats {
  long clipped[kMaxOrder] = {0, 0, 0, 0};
  long total[kMaxOrder] = {0, 0, 0, 0};
  long cand_len = 0;
  long ref_len = 0;

  void add_pair(const TokenSeq& cand, const TokenSeq& ref) {
    cand_len += static_cast<long>(cand.size());
    ref_len += static_cast<long>(ref.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      total[n - 1] += std::max<long>(1, static_cast<long>(cand.size()) - n + 1);
      auto cc = ngram_counts(cand, n);
      if (cc.empty()) continue;
      auto rc = ngram_counts(ref, n);
      for (const auto& [key, count] : cc) {
        auto it = rc.find(key);
        if (it != rc.end()) clipped[n - 1] += std::min(count, it->second);
      }
    }
  }

  double precision(int order, Smoothing smoothing) const {
    double num = static_cast<double>(clipped[order]);
    if (num == 0 && smoothing == Smoothing::kAddEpsilon) num = kEpsilonCount;
    return num / static_cast<double>(total[order]);
  }

  double brevity_penalty() const {
    if (cand_len == 0) return 0;
    if (cand_len > ref_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  }

  double score(const std::vector<double>& weights, Smoothing smoothing) const {
    if (weights.empty() || weights.size() > kMaxOrder)
      throw std::invalid_argument("bleu weights must cover orders 1..4");
    const double bp = brevity_penalty();
    if (bp == 0) return 0;
    double log_sum = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] == 0) continue;
      const double p = precision(static_cast<int>(i), smoothing);
      if (p == 0) return 0;
      log_sum += weights[i] * std::log(p);
    }
    return 100.0 * bp * std::exp(log_sum);
  }
};

void check_sizes(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references) {
  if (candidates.size() != references.size())
    throw std::invalid_argument("candidate/reference counts differ");
}

void check_keys(const KeyedSeqs& a, const KeyedSeqs& b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": key sets differ");
  auto ib = b.begin();
  for (const auto& [key, seq] : a) {
    if (ib->first != key) throw std::invalid_argument(std::string(what) + ": key sets differ");
    ++ib;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

double corpus_bleu(const std::vector<TokenSeq>& candidates,
                   const std::vector<TokenSeq>& references, const std::vector<double>& weights,
                   Smoothing smoothing) {
  check_sizes(candidates, references);
  if (candidates.empty()) return 0;
  PooledStats stats;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    stats.add_pair(candidates[i], references[i]);
  return stats.score(weights, smoothing);
}

BleuReport corpus_bleu_report(const std::vector<TokenSeq>& candidates,
                              const std::vector<TokenSeq>& references, Smoothing smoothing) {
  check_sizes(candidates, references);
  BleuReport report;
  if (candidates.empty()) return report;
  PooledStats stats;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    stats.add_pair(candidates[i], references[i]);
  report.composite = stats.score({0.25, 0.25, 0.25, 0.25}, smoothing);
  for (int n = 1; n <= kMaxOrder; ++n) {
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    w[static_cast<std::size_t>(n - 1)] = 1.0;
    report.bleu_n[n - 1] = stats.score(w, smoothing);
  }
  report.brevity_penalty = stats.brevity_penalty();
  report.candidate_length = stats.cand_len;
  report.reference_length = stats.ref_len;
  return report;
}

double sentence_bleu(const TokenSeq& candidate, const TokenSeq& reference,
                     Smoothing smoothing, const std::vector<double>& weights) {
  PooledStats stats;
  stats.add_pair(candidate, reference);
  return stats.score(weights, smoothing);
}

double corpus_bleu_keyed(const KeyedSeqs& candidates, const KeyedSeqs& references,
                         const std::vector<double>& weights, Smoothing smoothing) {
  check_keys(candidates, references, "corpus_bleu");
  std::vector<TokenSeq> cands, refs;
  cands.reserve(candidates.size());
  refs.reserve(references.size());
  for (const auto& [key, seq] : candidates) {
    cands.push_back(seq);
    refs.push_back(references.at(key));
  }
  return corpus_bleu(cands, refs, weights, smoothing);
}

OrthogonalityCounts orthogonality(const KeyedSeqs& preds_a, const KeyedSeqs& preds_b,
                                  const KeyedSeqs& references) {
  check_keys(preds_a, references, "orthogonality");
  check_keys(preds_b, references, "orthogonality");
  OrthogonalityCounts counts;
  for (const auto& [key, ref] : references) {
    const double a = sentence_bleu(preds_a.at(key), ref);
    const double b = sentence_bleu(preds_b.at(key), ref);
    if (a > b) ++counts.a_better;
    else if (b > a) ++counts.b_better;
    else ++counts.ties;
  }
  return counts;
}

double first_word_accuracy(const KeyedSeqs& preds, const KeyedSeqs& references) {
  check_keys(preds, references, "first_word_accuracy");
  if (references.empty()) return 0;
  long hits = 0;
  for (const auto& [key, ref] : references) {
    const TokenSeq& pred = preds.at(key);
    if (!pred.empty() && !ref.empty() && pred.front() == ref.front()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(references.size());
}

EvalReport evaluate(const KeyedSeqs& preds, const KeyedSeqs& references, Smoothing corpus_mode) {
  check_keys(preds, references, "evaluate");
  EvalReport report;
  report.method_count = static_cast<long>(references.size());

  std::vector<TokenSeq> cands, refs;
  for (const auto& [key, seq] : preds) {
    cands.push_back(seq);
    refs.push_back(references.at(key));
  }
  BleuReport bleu = corpus_bleu_report(cands, refs, corpus_mode);
  report.composite = bleu.composite;
  for (int i = 0; i < 4; ++i) report.bleu_n[i] = bleu.bleu_n[i];
  report.brevity_penalty = bleu.brevity_penalty;
  report.first_word_acc = first_word_accuracy(preds, references);
  for (const auto& [key, seq] : preds)
    report.per_method.emplace_back(key, sentence_bleu(seq, references.at(key)));
  return report;
}

// ---------------------------------------------------------------------------
// files
// ---------------------------------------------------------------------------

KeyedSeqs read_keyed_seqs(const std::string& path) {
  std::string text = read_file(path);
  KeyedSeqs out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    const std::string id_field(tab == std::string_view::npos ? line : line.substr(0, tab));
    const long id = std::stol(id_field);
    TokenSeq tokens;
    if (tab != std::string_view::npos) {
      std::string_view rest = line.substr(tab + 1);
      std::size_t tpos = 0;
      while (tpos < rest.size()) {
        std::size_t tend = rest.find(' ', tpos);
        if (tend == std::string_view::npos) tend = rest.size();
        if (tend > tpos) tokens.emplace_back(rest.substr(tpos, tend - tpos));
        tpos = tend + 1;
      }
    }
    if (!out.emplace(id, std::move(tokens)).second)
      throw std::runtime_error("duplicate method id " + id_field + " in " + path);
  }
  return out;
}

void write_keyed_seqs(const std::string& path, const KeyedSeqs& seqs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const auto& [id, tokens] : seqs) {
    out << id << '\t';
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out << ' ';
      out << tokens[i];
    }
    out << '\n';
  }
}

void write_eval_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j;
  j["method_count"] = report.method_count;
  j["composite_bleu"] = report.composite;
  j["bleu1"] = report.bleu_n[0];
  j["bleu2"] = report.bleu_n[1];
  j["bleu3"] = report.bleu_n[2];
  j["bleu4"] = report.bleu_n[3];
  j["brevity_penalty"] = report.brevity_penalty;
  j["first_word_accuracy"] = report.first_word_acc;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

void write_permethod_tsv(const std::string& path,
                         const std::vector<std::pair<long, double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const auto& [id, score] : rows) out << id << '\t' << score << '\n';
}

void write_orthogonality_tsv(const std::string& path, const KeyedSeqs& preds_a,
                             const KeyedSeqs& preds_b, const KeyedSeqs& references) {
  check_keys(preds_a, references, "orthogonality export");
  check_keys(preds_b, references, "orthogonality export");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const auto& [key, ref] : references) {
    const double a = sentence_bleu(preds_a.at(key), ref);
    const double b = sentence_bleu(preds_b.at(key), ref);
    const char* winner = a > b ? "a" : (b > a ? "b" : "tie");
    out << key << '\t' << a << '\t' << b << '\t' << winner << '\n';
  }
}

}  // namespace csum
