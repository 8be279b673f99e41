#include "sacl/model.hpp"

#include <bit>
#include <fstream>

namespace sacl {

SentimentModel::SentimentModel(std::unique_ptr<Encoder> encoder, std::uint64_t head_seed)
    : encoder_(std::move(encoder)), head_(encoder_->hidden_size(), head_seed) {}

SentimentModel::SentimentModel(const SentimentModel& other)
    : encoder_(other.encoder_->clone()), head_(other.head_) {}

SentimentModel& SentimentModel::operator=(const SentimentModel& other) {
  if (this != &other) {
    encoder_ = other.encoder_->clone();
    head_ = other.head_;
  }
  return *this;
}

ParameterRefs SentimentModel::parameters() {
  auto refs = encoder_->parameters();
  for (auto* p : head_.parameters()) refs.push_back(p);
  return refs;
}

void SentimentModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

Matrix SentimentModel::pooled(std::span<const TokenSequence> batch) const {
  Matrix h(static_cast<Eigen::Index>(batch.size()), encoder_->hidden_size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    h.row(static_cast<Eigen::Index>(i)) = encoder_->encode(batch[i]).pooled.transpose();
  }
  return h;
}

Matrix SentimentModel::logits(std::span<const TokenSequence> batch) const {
  return classifier_logits(pooled(batch), head_);
}

std::vector<Polarity> SentimentModel::predict(std::span<const TokenSequence> batch) const {
  return sacl::predict(logits(batch));
}

std::vector<Matrix> SentimentModel::snapshot() {
  std::vector<Matrix> values;
  for (auto* p : parameters()) values.push_back(p->value);
  return values;
}

void SentimentModel::restore(const std::vector<Matrix>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw Error("restore: snapshot does not match model");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMagic = "SACL-CHECKPOINT";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

}  // namespace

void save_checkpoint(SentimentModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["encoder"] = {{"kind", model.encoder().kind()}, {"config", model.encoder().config_json()}};
  header["tensors"] = nlohmann::json::array();
  const auto params = model.parameters();
  for (const auto* p : params) {
    header["tensors"].push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  out << kMagic << ' ' << kCheckpointVersion << '\n' << header.dump() << '\n';
  for (const auto* p : params) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw Error("checkpoint write failed: " + path.string());
}

SentimentModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::string magic_line;
  std::getline(in, magic_line);
  const std::string expected = std::string(kMagic) + " " + std::to_string(kCheckpointVersion);
  if (magic_line.rfind(kMagic, 0) != 0) throw Error(path.string() + ": not a checkpoint file");
  if (magic_line != expected) {
    throw Error(path.string() + ": unsupported checkpoint version '" + magic_line + "'");
  }
  std::string header_line;
  std::getline(in, header_line);
  const auto header = nlohmann::json::parse(header_line);
  const auto& enc = header.at("encoder");
  SentimentModel model(make_encoder(enc.at("kind").get<std::string>(), enc.at("config")), 0);
  auto params = model.parameters();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) throw Error(path.string() + ": tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    auto& p = *params[i];
    if (t.at("name").get<std::string>() != p.name || t.at("rows").get<Eigen::Index>() != p.value.rows() ||
        t.at("cols").get<Eigen::Index>() != p.value.cols()) {
      throw Error(path.string() + ": tensor '" + t.at("name").get<std::string>() +
                  "' does not match the encoder layout");
    }
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!in) throw Error(path.string() + ": truncated checkpoint");
  return model;
}

}  // namespace sacl
