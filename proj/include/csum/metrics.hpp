#pragma once

#include <map>
#include <string>
#include <vector>

namespace csum {

using TokenSeq = std::vector<std::string>;

/// Per-method keyed summaries, as read from predictions.tsv / references.tsv.
using KeyedSeqs = std::map<long, TokenSeq>;

enum class Smoothing {
  kNone,        // zero n-gram matches zero the geometric mean
  kAddEpsilon,  // substitute count 0.1 for zero matches (sentence-level use)
};

/// Corpus BLEU on the percent scale. Modified n-gram precisions are pooled
/// over the corpus (denominator per sentence max(1, len-n+1)); the geometric
/// mean under `weights` is multiplied by the brevity penalty exp(1 - r/c)
/// when c <= r. A zero precision under a positive weight zeroes the score
/// unless smoothing substitutes an epsilon count.
double corpus_bleu(const std::vector<TokenSeq>& candidates,
                   const std::vector<TokenSeq>& references,
                   const std::vector<double>& weights = {0.25, 0.25, 0.25, 0.25},
                   Smoothing smoothing = Smoothing::kNone);

/// Composite plus per-order scores from one pass: bleu_n[i] is BLEU_(i+1)
/// (weight 1 on that order), all on the percent scale.
struct BleuReport {
  double composite = 0;
  double bleu_n[4] = {0, 0, 0, 0};
  double brevity_penalty = 0;
  long candidate_length = 0;
  long reference_length = 0;
};

BleuReport corpus_bleu_report(const std::vector<TokenSeq>& candidates,
                              const std::vector<TokenSeq>& references,
                              Smoothing smoothing = Smoothing::kNone);

/// Single-pair BLEU (percent scale); thirteen-token summaries routinely have
/// zero 4-gram overlap, so per-method comparisons use add-epsilon smoothing.
double sentence_bleu(const TokenSeq& candidate, const TokenSeq& reference,
                     Smoothing smoothing = Smoothing::kAddEpsilon,
                     const std::vector<double>& weights = {0.25, 0.25, 0.25, 0.25});

/// Keyed variant; throws std::invalid_argument when the key sets differ.
double corpus_bleu_keyed(const KeyedSeqs& candidates, const KeyedSeqs& references,
                         const std::vector<double>& weights = {0.25, 0.25, 0.25, 0.25},
                         Smoothing smoothing = Smoothing::kNone);

/// Per-method sentence-BLEU comparison of two systems against shared
/// references (same smoothing for both sides by construction).
struct OrthogonalityCounts {
  long a_better = 0;
  long b_better = 0;
  long ties = 0;
};

OrthogonalityCounts orthogonality(const KeyedSeqs& preds_a, const KeyedSeqs& preds_b,
                                  const KeyedSeqs& references);

/// Fraction of methods whose first emitted word equals the reference's first
/// word; empty predictions never match.
double first_word_accuracy(const KeyedSeqs& preds, const KeyedSeqs& references);

struct EvalReport {
  long method_count = 0;
  double composite = 0;
  double bleu_n[4] = {0, 0, 0, 0};
  double brevity_penalty = 0;
  double first_word_acc = 0;
  std::vector<std::pair<long, double>> per_method;  // id -> sentence BLEU
};

EvalReport evaluate(const KeyedSeqs& preds, const KeyedSeqs& references, Smoothing corpus_mode);

// --- file interfaces ---------------------------------------------------------

/// `id \t space-separated tokens` per line (an absent token column is an
/// empty summary).
KeyedSeqs read_keyed_seqs(const std::string& path);
void write_keyed_seqs(const std::string& path, const KeyedSeqs& seqs);

void write_eval_json(const std::string& path, const EvalReport& report);
void write_permethod_tsv(const std::string& path,
                         const std::vector<std::pair<long, double>>& rows);

/// Orthogonality export: id, sentence BLEU of each system, and the winner
/// column (`a`, `b`, or `tie`).
void write_orthogonality_tsv(const std::string& path, const KeyedSeqs& preds_a,
                             const KeyedSeqs& preds_b, const KeyedSeqs& references);

}  // namespace csum
