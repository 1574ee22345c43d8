#pragma once

// Operator entry point: one process per subcommand. Each run writes a
// `run.json` echoing the fully resolved configuration next to its outputs so
// any artifact can be traced back to the exact invocation that produced it.

#include <string>
#include <vector>

namespace csum {

/// Fully resolved options for one subcommand run.
struct RunConfig {
  std::string subcommand;

  // paths
  std::string corpus;           // raw corpus: project tree or records TSV (prep)
  std::string data_dir;         // prepared dataset directory
  std::string out;              // output directory or file, per subcommand
  std::vector<std::string> checkpoints;  // one for predict/attention, 2+ for ensemble
  std::string whitelist;        // SBT-AO API whitelist, one type name per line
  std::string stopwords;        // English-filter stopword list (built-in default)
  std::string autogen_phrases;  // auto-generated-file phrases (built-in default)
  std::string preds;            // eval: predictions TSV
  std::string refs;             // eval: references TSV
  std::string refs_out;         // predict: optional references export
  std::string split = "test";   // dataset split to decode or export
  long method_id = -1;          // attention: which method to explain

  // data and model dimensions
  std::string kind = "ast-attendgru";
  int txtlen = 100;
  int astlen = 100;
  int comlen = 13;
  int embdims = 100;
  int rnndims = 256;
  int txt_vocab = 10000;
  int ast_vocab = 10000;
  int com_vocab = 10000;

  // training
  int epochs = 10;
  int batch_size = 200;
  unsigned long long seed = 1;

  // behaviour switches
  std::string smoothing = "none";  // none | epsilon (corpus eval mode)
  std::string sbt_mode = "sbtao";  // sbt | sbtao: stream feeding AST encoders
};

/// Parse argv, dispatch, report errors on stderr. Returns the process exit
/// status (0 success, nonzero on any pipeline or usage error).
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

// Individual subcommands, callable in-process; throw on error.
void cmd_prep(const RunConfig& rc);
void cmd_train(const RunConfig& rc);
void cmd_predict(const RunConfig& rc);
void cmd_eval(const RunConfig& rc);
void cmd_ensemble(const RunConfig& rc);
void cmd_attention(const RunConfig& rc);

}  // namespace csum
