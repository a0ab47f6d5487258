#include "msmi/discriminator.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "msmi/errors.hpp"
#include "msmi/math.hpp"
#include "msmi/random.hpp"

namespace msmi {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'M', 'I'};
constexpr std::uint32_t kFormatVersion = 1;

Eigen::VectorXd logits_for(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                           const SparseVec& x) {
  Eigen::VectorXd logits = bias;
  for (SparseVec::InnerIterator it(x); it; ++it) {
    logits += weights.col(it.index()) * it.value();
  }
  return logits;
}

struct Dataset {
  std::vector<SparseVec> inputs;
  std::vector<int> labels;
};

Dataset vectorize_corpus(const Vectorizer& vectorizer, const Corpus& corpus,
                         bool concatenate_fields, int num_classes) {
  Dataset data;
  data.inputs.reserve(corpus.size());
  data.labels.reserve(corpus.size());
  for (const Record& record : corpus.records) {
    if (record.label < 0 || record.label >= num_classes) {
      throw DataError("record \"" + record.id + "\" has class index " +
                      std::to_string(record.label) + ", expected < " +
                      std::to_string(num_classes));
    }
    data.inputs.push_back(vectorize(vectorizer, classification_text(record, concatenate_fields)));
    data.labels.push_back(record.label);
  }
  return data;
}

double dataset_accuracy(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                        const Dataset& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    const Eigen::VectorXd logits = logits_for(weights, bias, data.inputs[i]);
    if (argmax_lowest(logits) == data.labels[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.inputs.size());
}

// ---- binary container helpers -------------------------------------------

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.append(s);
  }
  void raw(const char* data, std::size_t n) { bytes_.append(data, n); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    std::string_view b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::string_view b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(b[i])) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(take(n));
  }
  std::string_view take(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw ModelFormatError("model file checksum mismatch (truncated payload)");
    }
    std::string_view out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t payload_crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

Verdict make_verdict(Eigen::VectorXd probabilities) {
  if (probabilities.size() < 2) {
    throw ProtocolError("verdict needs at least two class probabilities");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities(i) >= 0.0)) {
      throw ProtocolError("verdict probability " + std::to_string(i) + " is negative or NaN");
    }
    sum += probabilities(i);
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ProtocolError("verdict probabilities sum to " + std::to_string(sum) + ", not 1");
  }
  Verdict verdict;
  verdict.predicted = argmax_lowest(probabilities);
  verdict.probabilities = std::move(probabilities);
  return verdict;
}

DiscriminatorModel::DiscriminatorModel(Vectorizer vectorizer, Eigen::MatrixXd weights,
                                       Eigen::VectorXd bias, std::vector<std::string> label_names)
    : vectorizer_(std::move(vectorizer)),
      weights_(std::move(weights)),
      bias_(std::move(bias)),
      label_names_(std::move(label_names)) {
  if (bias_.size() < 2 || weights_.rows() != bias_.size() ||
      weights_.cols() != vectorizer_.dimension() ||
      label_names_.size() != static_cast<std::size_t>(bias_.size())) {
    throw DataError("inconsistent discriminator model shapes");
  }
}

Verdict DiscriminatorModel::score(std::string_view text) const {
  const SparseVec x = vectorize(vectorizer_, text);
  return make_verdict(softmax(logits_for(weights_, bias_, x)));
}

DiscriminatorModel train_classifier(const Corpus& train, const Corpus& val,
                                    const TrainConfig& train_config,
                                    const TokenizerConfig& tokenizer_config,
                                    TrainReport* report, bool concatenate_fields) {
  if (train.empty()) {
    throw DataError("train_classifier: empty training corpus");
  }
  if (train_config.epochs < 1) {
    throw ConfigError("epochs must be >= 1");
  }
  const double eta0 = train_config.learning_rate_0;
  const double lambda = train_config.l2_lambda;
  if (eta0 <= 0) {
    throw ConfigError("learning_rate_0 must be positive");
  }
  if (lambda < 0 || eta0 * lambda >= 1.0) {
    throw ConfigError("l2_lambda must satisfy 0 <= lambda < 1/learning_rate_0");
  }

  const int num_classes = train.num_classes();
  if (num_classes < 2) {
    throw DataError("training corpus must define at least two classes");
  }

  std::vector<std::string> train_texts;
  train_texts.reserve(train.size());
  for (const Record& record : train.records) {
    train_texts.push_back(classification_text(record, concatenate_fields));
  }
  Vectorizer vectorizer = fit_vectorizer(train_texts, tokenizer_config,
                                         train_config.vocab_size_max, train_config.min_doc_freq);

  const Dataset train_data = vectorize_corpus(vectorizer, train, concatenate_fields, num_classes);
  const Dataset val_data = vectorize_corpus(vectorizer, val, concatenate_fields, num_classes);

  const int dim = vectorizer.dimension();
  Eigen::MatrixXd stored = Eigen::MatrixXd::Zero(num_classes, dim);
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(num_classes);
  double scale = 1.0;  // effective weights = scale * stored

  Eigen::MatrixXd best_weights = stored;
  Eigen::VectorXd best_bias = bias;
  double best_accuracy = -1.0;
  int best_epoch = 0;

  TrainReport local_report;
  std::mt19937_64 rng(train_config.seed);
  const std::size_t n = train_data.inputs.size();
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    const std::vector<std::size_t> order = random_permutation(n, rng);
    for (std::size_t k = 0; k < n; ++k) {
      const SparseVec& x = train_data.inputs[order[k]];
      const int y = train_data.labels[order[k]];
      const double eta = eta0 / (1.0 + lambda * eta0 * static_cast<double>(step));
      ++step;

      Eigen::VectorXd logits = bias;
      for (SparseVec::InnerIterator it(x); it; ++it) {
        logits += stored.col(it.index()) * (scale * it.value());
      }
      Eigen::VectorXd grad = softmax(logits);
      grad(y) -= 1.0;

      // L2 shrink folded into the scale; the sparse data term divides it out.
      scale *= (1.0 - eta * lambda);
      for (SparseVec::InnerIterator it(x); it; ++it) {
        stored.col(it.index()) -= grad * (eta * it.value() / scale);
      }
      bias -= eta * grad;

      if (scale < 1e-9) {
        stored *= scale;
        scale = 1.0;
      }
    }

    const Eigen::MatrixXd effective = scale * stored;
    double accuracy;
    if (val_data.inputs.empty()) {
      accuracy = 0.0;
      if (epoch == train_config.epochs) {  // no validation set: keep the last epoch
        best_weights = effective;
        best_bias = bias;
        best_epoch = epoch;
      }
    } else {
      accuracy = dataset_accuracy(effective, bias, val_data);
      if (accuracy > best_accuracy) {
        best_accuracy = accuracy;
        best_weights = effective;
        best_bias = bias;
        best_epoch = epoch;
      }
    }
    local_report.val_accuracy_by_epoch.push_back(accuracy);
  }

  local_report.best_epoch = best_epoch;
  local_report.best_val_accuracy = val_data.inputs.empty() ? 0.0 : best_accuracy;
  if (report != nullptr) {
    *report = local_report;
  }
  return DiscriminatorModel(std::move(vectorizer), std::move(best_weights), std::move(best_bias),
                            train.label_names);
}

double evaluate_accuracy(const Scorer& scorer, const Corpus& corpus, bool concatenate_fields) {
  if (corpus.empty()) {
    throw DataError("evaluate_accuracy: empty corpus");
  }
  std::size_t correct = 0;
  for (const Record& record : corpus.records) {
    const Verdict verdict = scorer.score(classification_text(record, concatenate_fields));
    if (record.label < 0 || record.label >= verdict.probabilities.size()) {
      throw DataError("record \"" + record.id + "\" has class index " +
                      std::to_string(record.label) + " outside the model's " +
                      std::to_string(verdict.probabilities.size()) + " classes");
    }
    if (verdict.predicted == record.label) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.size());
}

LossGrad regularized_cross_entropy(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                                   const std::vector<SparseVec>& inputs,
                                   const std::vector<int>& labels, double l2_lambda) {
  if (inputs.empty() || inputs.size() != labels.size()) {
    throw DataError("regularized_cross_entropy: empty or mismatched batch");
  }
  const double inv_n = 1.0 / static_cast<double>(inputs.size());

  LossGrad out;
  out.grad_weights = Eigen::MatrixXd::Zero(weights.rows(), weights.cols());
  out.grad_bias = Eigen::VectorXd::Zero(bias.size());

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Eigen::VectorXd logits = logits_for(weights, bias, inputs[i]);
    const double max_logit = logits.maxCoeff();
    const double lse = max_logit + std::log((logits.array() - max_logit).exp().sum());
    out.loss += inv_n * (lse - logits(labels[i]));

    Eigen::VectorXd grad = softmax(logits);
    grad(labels[i]) -= 1.0;
    for (SparseVec::InnerIterator it(inputs[i]); it; ++it) {
      out.grad_weights.col(it.index()) += grad * (inv_n * it.value());
    }
    out.grad_bias += inv_n * grad;
  }

  out.loss += 0.5 * l2_lambda * weights.squaredNorm();
  out.grad_weights += l2_lambda * weights;
  return out;
}

void save_model(const DiscriminatorModel& model, const std::filesystem::path& path) {
  ByteWriter writer;
  writer.raw(kMagic, sizeof(kMagic));
  writer.u32(kFormatVersion);

  const TokenizerConfig& tok = model.vectorizer().config;
  writer.u8(tok.mode == TokenizerMode::CharNgram ? 0 : 1);
  writer.u32(static_cast<std::uint32_t>(tok.ngram_min));
  writer.u32(static_cast<std::uint32_t>(tok.ngram_max));
  writer.u8(tok.lowercase ? 1 : 0);

  const int num_classes = model.num_classes();
  writer.u32(static_cast<std::uint32_t>(num_classes));
  for (const std::string& name : model.label_names()) {
    writer.str(name);
  }

  // Vocabulary in column order; columns are lexicographic by construction,
  // which makes the payload independent of fitting-corpus order.
  const int dim = model.vectorizer().dimension();
  std::vector<const std::string*> features(static_cast<std::size_t>(dim), nullptr);
  for (const auto& [feature, col] : model.vectorizer().vocabulary) {
    features[static_cast<std::size_t>(col)] = &feature;
  }
  writer.u64(static_cast<std::uint64_t>(dim));
  for (int col = 0; col < dim; ++col) {
    writer.str(*features[static_cast<std::size_t>(col)]);
    writer.f64(model.vectorizer().idf(col));
  }

  for (int row = 0; row < num_classes; ++row) {
    for (int col = 0; col < dim; ++col) {
      writer.f64(model.weights()(row, col));
    }
  }
  for (int row = 0; row < num_classes; ++row) {
    writer.f64(model.bias()(row));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write model file " + path.string());
  }
  out.write(writer.bytes().data(), static_cast<std::streamsize>(writer.bytes().size()));
  const std::uint32_t crc = payload_crc(writer.bytes());
  char crc_bytes[4];
  for (int i = 0; i < 4; ++i) crc_bytes[i] = static_cast<char>((crc >> (8 * i)) & 0xff);
  out.write(crc_bytes, 4);
  if (!out) {
    throw IoError("failed while writing model file " + path.string());
  }
}

DiscriminatorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open model file " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kMagic) + 8) {
    throw ModelFormatError("model file checksum mismatch (file too short)");
  }
  const std::string_view payload(bytes.data(), bytes.size() - 4);
  std::uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i) {
    stored_crc |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[bytes.size() - 4 + i]))
                  << (8 * i);
  }
  if (payload_crc(payload) != stored_crc) {
    throw ModelFormatError("model file checksum mismatch");
  }

  ByteReader reader(payload);
  if (reader.take(4) != std::string_view(kMagic, 4)) {
    throw ModelFormatError("not a discriminator model file (bad magic)");
  }
  const std::uint32_t version = reader.u32();
  if (version != kFormatVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(version));
  }

  Vectorizer vectorizer;
  vectorizer.config.mode = reader.u8() == 0 ? TokenizerMode::CharNgram : TokenizerMode::Word;
  vectorizer.config.ngram_min = static_cast<int>(reader.u32());
  vectorizer.config.ngram_max = static_cast<int>(reader.u32());
  vectorizer.config.lowercase = reader.u8() != 0;

  const std::uint32_t num_classes = reader.u32();
  std::vector<std::string> label_names;
  label_names.reserve(num_classes);
  for (std::uint32_t i = 0; i < num_classes; ++i) {
    label_names.push_back(reader.str());
  }

  const std::uint64_t dim = reader.u64();
  vectorizer.idf.resize(static_cast<Eigen::Index>(dim));
  for (std::uint64_t col = 0; col < dim; ++col) {
    std::string feature = reader.str();
    vectorizer.idf(static_cast<Eigen::Index>(col)) = reader.f64();
    vectorizer.vocabulary.emplace(std::move(feature), static_cast<int>(col));
  }

  Eigen::MatrixXd weights(num_classes, dim);
  for (std::uint32_t row = 0; row < num_classes; ++row) {
    for (std::uint64_t col = 0; col < dim; ++col) {
      weights(row, static_cast<Eigen::Index>(col)) = reader.f64();
    }
  }
  Eigen::VectorXd bias(num_classes);
  for (std::uint32_t row = 0; row < num_classes; ++row) {
    bias(row) = reader.f64();
  }

  return DiscriminatorModel(std::move(vectorizer), std::move(weights), std::move(bias),
                            std::move(label_names));
}

}  // namespace msmi
