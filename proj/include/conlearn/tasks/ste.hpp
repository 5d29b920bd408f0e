#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "conlearn/constraint/explore.hpp"
#include "conlearn/models/seq2seq.hpp"
#include "conlearn/models/vocab.hpp"
#include "conlearn/tasks/task.hpp"
#include "conlearn/text.hpp"

namespace conlearn::tasks {

/// (az|bz)* -> (za|bbb)*, chunk by chunk.
inline std::string ste_transduce(std::string_view src) {
  if (src.size() % 2 != 0) throw InputError("STE source '" + std::string(src) + "' has odd length");
  std::string out;
  for (std::size_t i = 0; i < src.size(); i += 2) {
    const auto chunk = src.substr(i, 2);
    if (chunk == "az")
      out += "za";
    else if (chunk == "bz")
      out += "bbb";
    else
      throw InputError("STE source '" + std::string(src) + "' is not in (az|bz)*");
  }
  return out;
}

/// (3 x_b - y_b)^2 / (|x| + |y|), clamped to [0,1]; counts 'b' symbols.
inline double ste_violation(std::string_view src, std::string_view out) {
  const double xb = static_cast<double>(std::count(src.begin(), src.end(), 'b'));
  const double yb = static_cast<double>(std::count(out.begin(), out.end(), 'b'));
  const double len = static_cast<double>(src.size() + out.size());
  if (len == 0.0) return 0.0;
  const double d = (3.0 * xb - yb) * (3.0 * xb - yb) / len;
  return std::clamp(d, 0.0, 1.0);
}

inline std::string ste_random_source(Rng& rng, int min_chunks, int max_chunks) {
  const int n = uniform_int(rng, min_chunks, max_chunks);
  std::string s;
  for (int i = 0; i < n; ++i) s += uniform01(rng) < 0.5 ? "az" : "bz";
  return s;
}

using SteDataset = Dataset<std::string, std::string>;

inline constexpr int kSteTrainChunks[2] = {3, 6};
inline constexpr int kSteTestChunks[2] = {3, 8};

/// Train sources carry 3..6 chunks, test sources 3..8 (chunk total uniform).
inline SteDataset gen_ste(bool train, std::size_t count, Rng& rng) {
  if (count == 0) throw ContractViolation("gen_ste: count must be positive");
  const auto& range = train ? kSteTrainChunks : kSteTestChunks;
  SteDataset d{"ste", 0, {}, {}, {}};
  for (std::size_t i = 0; i < count; ++i) {
    auto s = ste_random_source(rng, range[0], range[1]);
    d.outputs.push_back(ste_transduce(s));
    d.inputs.push_back(std::move(s));
  }
  return d;
}

/// Unlabeled STE sources drawn with the test chunk range, rejecting any
/// string that occurs among the labeled training sources.
inline std::vector<std::string> gen_ste_pool(std::size_t count, const std::vector<std::string>& labeled, Rng& rng) {
  const std::set<std::string> seen(labeled.begin(), labeled.end());
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 1)) throw ContractViolation("gen_ste_pool: cannot find sources disjoint from training data");
    auto s = ste_random_source(rng, kSteTestChunks[0], kSteTestChunks[1]);
    if (!seen.contains(s)) out.push_back(std::move(s));
  }
  return out;
}

inline void write_ste(std::ostream& os, const SteDataset& d) {
  for (std::size_t i = 0; i < d.size(); ++i) os << d.inputs[i] << '\t' << d.outputs[i] << '\n';
}

inline SteDataset read_ste(std::istream& is) {
  SteDataset d{"ste", 0, {}, {}, {}};
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    if (f.size() != 2) throw InputError("ste data line " + std::to_string(n) + ": expected input<TAB>output");
    d.inputs.push_back(f[0]);
    d.outputs.push_back(f[1]);
  }
  return d;
}

class SteTask : public Task {
 public:
  static constexpr std::size_t kDefaultTrain = 6000;
  static constexpr std::size_t kDefaultTest = 1000;
  static constexpr std::size_t kDefaultPool = 1000;

  explicit SteTask(const TaskOptions& opt)
      : vocab_({"a", "b", "z"}), model_({vocab_.size(), 32, 64, true}) {
    auto tr = detail::data_stream(opt.data_seed, detail::kTrainStream);
    auto te = detail::data_stream(opt.data_seed, detail::kTestStream);
    auto po = detail::data_stream(opt.data_seed, detail::kPoolStream);
    train_ = gen_ste(true, detail::or_default(opt.train, kDefaultTrain), tr);
    test_ = gen_ste(false, detail::or_default(opt.test, kDefaultTest), te);
    train_.seed = test_.seed = opt.data_seed;
    const std::size_t pool = opt.unlabeled_set ? opt.unlabeled : kDefaultPool;
    if (pool > 0) train_.unlabeled = gen_ste_pool(pool, train_.inputs, po);
    encode(train_, train_src_, train_tgt_);
    encode(test_, test_src_, test_tgt_);
    for (const auto& s : train_.unlabeled) pool_src_.push_back(vocab_.encode_chars(s));

    constraint::ConstraintSpec spec;
    spec.name = "b-count";
    const int b = vocab_.id("b");
    spec.degree = [b](std::span<const int> in, std::span<const int> out) {
      const double xb = static_cast<double>(std::count(in.begin(), in.end(), b));
      const double yb = static_cast<double>(std::count(out.begin(), out.end(), b));
      const double len = static_cast<double>(in.size() + out.size());
      return len == 0.0 ? 0.0 : std::clamp((3.0 * xb - yb) * (3.0 * xb - yb) / len, 0.0, 1.0);
    };
    specs_.push_back(std::move(spec));
  }

  std::string name() const override { return "ste"; }
  metrics::MetricKind metric() const override { return metrics::MetricKind::TokenAccuracy; }
  const std::vector<constraint::ConstraintSpec>& specs() const override { return specs_; }
  bool supports_soft() const override { return false; }
  bool supports_exhaustive() const override { return false; }

  ad::ParamSet init_params(Rng& rng) const override { return model_.init(rng); }
  std::size_t train_size() const override { return train_src_.size(); }
  std::size_t pool_size() const override { return train_src_.size() + pool_src_.size(); }

  ad::Var supervised_loss(ad::Graph& g, const models::Bound& p, std::span<const std::size_t> idx) const override {
    std::vector<std::vector<int>> src, tgt;
    for (auto i : idx) {
      src.push_back(train_src_.at(i));
      tgt.push_back(train_tgt_.at(i));
    }
    return model_.teacher_forced_loss(g, p, model_.encode(g, p, src), tgt);
  }

  std::unique_ptr<constraint::OutputSource> constraint_source(ad::Graph&, const models::Bound& p,
                                                              std::span<const std::size_t> idx) const override {
    std::vector<std::vector<int>> src;
    for (auto i : idx) src.push_back(i < train_src_.size() ? train_src_[i] : pool_src_.at(i - train_src_.size()));
    return std::make_unique<constraint::Seq2SeqSource>(model_, p, std::move(src));
  }

  Evaluation evaluate(const ad::ParamSet& params) const override {
    auto pred = predict(params, test_src_);
    return {metrics::token_accuracy(pred, test_tgt_), metrics::violation_rate(specs_, test_src_, pred),
            test_src_.size()};
  }

  /// Greedy decodes, batched.
  std::vector<std::vector<int>> predict(const ad::ParamSet& params, const std::vector<std::vector<int>>& src) const {
    std::vector<std::vector<int>> out;
    constexpr std::size_t kChunk = 100;
    for (std::size_t s = 0; s < src.size(); s += kChunk) {
      std::vector<std::vector<int>> part(src.begin() + static_cast<std::ptrdiff_t>(s),
                                         src.begin() + static_cast<std::ptrdiff_t>(std::min(src.size(), s + kChunk)));
      std::size_t longest = 0;
      for (const auto& x : part) longest = std::max(longest, x.size());
      ad::Graph g;
      auto b = g.bind(params);
      auto gen = model_.decode(g, b, model_.encode(g, b, part), models::default_max_len(longest),
                               models::DecodeMode::Greedy, nullptr);
      for (auto& t : gen.tokens) out.push_back(std::move(t));
    }
    return out;
  }

  std::string transduce(const ad::ParamSet& params, const std::string& src) const {
    return vocab_.decode_chars(predict(params, {vocab_.encode_chars(src)})[0]);
  }

  void write_data(std::ostream& train, std::ostream& test, std::ostream& unlabeled) const override {
    write_ste(train, train_);
    write_ste(test, test_);
    for (const auto& s : train_.unlabeled) unlabeled << s << '\n';
  }

  const SteDataset& train() const { return train_; }
  const SteDataset& test() const { return test_; }
  const models::Vocab& vocab() const { return vocab_; }
  const models::Seq2Seq& model() const { return model_; }

 private:
  void encode(const SteDataset& d, std::vector<std::vector<int>>& src, std::vector<std::vector<int>>& tgt) const {
    for (std::size_t i = 0; i < d.size(); ++i) {
      src.push_back(vocab_.encode_chars(d.inputs[i]));
      tgt.push_back(vocab_.encode_chars(d.outputs[i]));
    }
  }

  models::Vocab vocab_;
  models::Seq2Seq model_;
  SteDataset train_, test_;
  std::vector<std::vector<int>> train_src_, train_tgt_, test_src_, test_tgt_, pool_src_;
  std::vector<constraint::ConstraintSpec> specs_;
};

}  // namespace conlearn::tasks
