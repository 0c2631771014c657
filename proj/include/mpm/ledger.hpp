#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <openssl/evp.h>

#include "mpm/errors.hpp"
#include "mpm/serialization.hpp"
#include "mpm/settlement.hpp"

namespace mpm {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::string_view bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size())
    throw std::runtime_error("SHA-256 digest failed");
  return out;
}

inline std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

namespace detail {

inline void put_be64(std::string& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

inline void put_be32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

inline std::uint64_t get_be(std::string_view in, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < width; ++k) v = (v << 8) | static_cast<std::uint8_t>(in[k]);
  return v;
}

}  // namespace detail

struct Block {
  std::uint64_t index = 0;
  std::int64_t timestamp_ms = 0;
  Digest prev_hash{};
  /// Canonical JSON text (sorted keys); empty for the genesis block.
  std::string payload;
  Digest hash{};

  bool operator==(const Block&) const = default;
};

/// SHA-256 over index (BE64), timestamp (BE64), prev_hash, payload length
/// (BE64) and payload bytes.
inline Digest block_hash(std::uint64_t index, std::int64_t timestamp_ms, const Digest& prev,
                         std::string_view payload) {
  std::string buf;
  buf.reserve(56 + payload.size());
  detail::put_be64(buf, index);
  detail::put_be64(buf, static_cast<std::uint64_t>(timestamp_ms));
  buf.append(reinterpret_cast<const char*>(prev.data()), prev.size());
  detail::put_be64(buf, payload.size());
  buf.append(payload);
  return sha256(buf);
}

inline Digest block_hash(const Block& b) {
  return block_hash(b.index, b.timestamp_ms, b.prev_hash, b.payload);
}

inline Block genesis_block() {
  Block g;
  g.hash = block_hash(g);
  return g;
}

struct VerifyResult {
  bool ok = true;
  std::optional<std::size_t> first_bad;
  std::size_t length = 0;
};

namespace detail {

inline bool block_valid(const std::vector<Block>& blocks, std::size_t k) {
  const Block& b = blocks[k];
  if (b.index != k) return false;
  if (k == 0) {
    if (b.prev_hash != Digest{}) return false;
  } else if (b.prev_hash != blocks[k - 1].hash) {
    return false;
  }
  return block_hash(b) == b.hash;
}

}  // namespace detail

/// Append-only hash-chained log. A chain built only through `append` stays
/// valid; `from_blocks` and `mutable_blocks` hand out unchecked state, after
/// which the next append re-verifies from the start.
class Chain {
public:
  Chain() : blocks_{genesis_block()}, verified_(1) {}

  static Chain from_blocks(std::vector<Block> blocks) {
    Chain c;
    c.blocks_ = std::move(blocks);
    c.verified_ = 0;
    return c;
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  std::vector<Block>& mutable_blocks() {
    verified_ = 0;
    return blocks_;
  }
  std::size_t size() const { return blocks_.size(); }
  const Block& back() const { return blocks_.back(); }

  const Block& append(std::string payload, std::int64_t timestamp_ms) {
    check_integrity();
    Block b;
    b.index = blocks_.size();
    b.timestamp_ms = timestamp_ms;
    b.prev_hash = blocks_.back().hash;
    b.payload = std::move(payload);
    b.hash = block_hash(b);
    blocks_.push_back(std::move(b));
    verified_ = blocks_.size();
    return blocks_.back();
  }

  const Block& append(const json& payload, std::int64_t timestamp_ms) {
    return append(payload.dump(), timestamp_ms);
  }

private:
  void check_integrity() {
    if (blocks_.empty()) throw IntegrityError("chain has no genesis block", 0);
    for (; verified_ < blocks_.size(); ++verified_)
      if (!detail::block_valid(blocks_, verified_))
        throw IntegrityError("chain corrupted at block " + std::to_string(verified_), verified_);
  }

  std::vector<Block> blocks_;
  std::size_t verified_ = 0;
};

/// True iff every block links to its predecessor and its hash recomputes.
/// A truncated chain still verifies: hash chains only protect prefixes.
inline VerifyResult verify_chain(const Chain& chain) {
  VerifyResult r;
  const auto& blocks = chain.blocks();
  r.length = blocks.size();
  if (blocks.empty()) {
    r.ok = false;
    r.first_bad = 0;
    return r;
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (!detail::block_valid(blocks, k)) {
      r.ok = false;
      r.first_bad = k;
      return r;
    }
  }
  return r;
}

/// Monotonic millisecond counter standing in for wall-clock timestamps.
class LogicalClock {
public:
  explicit LogicalClock(std::int64_t start_ms = 0, std::int64_t step_ms = 1)
      : next_(start_ms), step_(step_ms) {}

  std::int64_t operator()() {
    const std::int64_t t = next_;
    next_ += step_;
    return t;
  }

private:
  std::int64_t next_;
  std::int64_t step_;
};

// ---------------------------------------------------------------------------
// Reputation payloads

struct ReputationUpdate {
  std::string participant_id;
  Role role = Role::Requester;
  double old_score = 0;
  double new_score = 0;
  std::string transaction_id;
  Outcome outcome = Outcome::Success;

  bool operator==(const ReputationUpdate&) const = default;
};

inline void to_json(json& j, const ReputationUpdate& u) {
  j = json{{"type", "reputation_update"},
           {"participant", u.participant_id},
           {"role", to_string(u.role)},
           {"old", u.old_score},
           {"new", u.new_score},
           {"transaction", u.transaction_id},
           {"outcome", to_string(u.outcome)}};
}

inline void from_json(const json& j, ReputationUpdate& u) {
  u.participant_id = j.at("participant").get<std::string>();
  u.role = role_from_string(j.at("role").get<std::string>());
  u.old_score = j.at("old").get<double>();
  u.new_score = j.at("new").get<double>();
  u.transaction_id = j.at("transaction").get<std::string>();
  u.outcome = outcome_from_string(j.at("outcome").get<std::string>());
}

/// Payload recording a participant's score on entering the chain.
inline json enrollment_payload(const std::string& participant, Role role, double score) {
  return json{{"type", "enrollment"},
              {"participant", participant},
              {"role", to_string(role)},
              {"score", score}};
}

inline json rules_payload(const ReputationRules& rules) {
  return json{{"type", "rules"}, {"rules", rules}};
}

namespace detail {

inline std::optional<json> parse_payload(const Block& b) {
  if (b.payload.empty()) return std::nullopt;
  json j = json::parse(b.payload, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

inline std::string payload_type(const json& j) {
  auto it = j.find("type");
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

}  // namespace detail

inline std::vector<ReputationUpdate> reputation_history(const Chain& chain,
                                                        const std::string& participant) {
  std::vector<ReputationUpdate> out;
  for (const auto& b : chain.blocks()) {
    auto j = detail::parse_payload(b);
    if (!j || detail::payload_type(*j) != "reputation_update") continue;
    if (j->value("participant", std::string{}) != participant) continue;
    out.push_back(j->get<ReputationUpdate>());
  }
  return out;
}

/// Most recent score for `participant`: the last update or enrollment, else
/// the rules' initial score.
inline double latest_reputation(const Chain& chain, const std::string& participant,
                                const ReputationRules& rules = {}) {
  const auto& blocks = chain.blocks();
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    auto j = detail::parse_payload(*it);
    if (!j || j->value("participant", std::string{}) != participant) continue;
    const std::string type = detail::payload_type(*j);
    if (type == "reputation_update") return j->at("new").get<double>();
    if (type == "enrollment") return j->at("score").get<double>();
  }
  return rules.initial;
}

/// Re-derives every stored update from its predecessor score and outcome.
/// Returns the index of the first block whose update does not follow, if any.
/// A "rules" block replaces the active rules from that point on.
inline std::optional<std::size_t> replay_reputation(const Chain& chain,
                                                    ReputationRules rules = {}) {
  std::unordered_map<std::string, double> score;
  const auto& blocks = chain.blocks();
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto j = detail::parse_payload(blocks[k]);
    if (!j) continue;
    const std::string type = detail::payload_type(*j);
    if (type == "rules") {
      rules = j->at("rules").get<ReputationRules>();
    } else if (type == "enrollment") {
      score[j->at("participant").get<std::string>()] = j->at("score").get<double>();
    } else if (type == "reputation_update") {
      const auto u = j->get<ReputationUpdate>();
      auto it = score.find(u.participant_id);
      const double before = it == score.end() ? rules.initial : it->second;
      if (u.old_score != before ||
          u.new_score != update_reputation(before, u.role, u.outcome, rules))
        return k;
      score[u.participant_id] = u.new_score;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Chain files: a sequence of records, each a BE32 byte length followed by
// index (BE64), timestamp (BE64), prev_hash (32), hash (32), payload bytes.

inline constexpr std::size_t kBlockHeaderBytes = 8 + 8 + 32 + 32;

inline std::string encode_block(const Block& b) {
  std::string body;
  body.reserve(kBlockHeaderBytes + b.payload.size());
  detail::put_be64(body, b.index);
  detail::put_be64(body, static_cast<std::uint64_t>(b.timestamp_ms));
  body.append(reinterpret_cast<const char*>(b.prev_hash.data()), 32);
  body.append(reinterpret_cast<const char*>(b.hash.data()), 32);
  body.append(b.payload);
  std::string out;
  detail::put_be32(out, static_cast<std::uint32_t>(body.size()));
  return out + body;
}

inline std::string encode_chain(const Chain& chain) {
  std::string out;
  for (const auto& b : chain.blocks()) out += encode_block(b);
  return out;
}

/// Parses a chain file image. A record that cannot be framed raises
/// IntegrityError carrying its block position.
inline Chain decode_chain(std::string_view bytes) {
  std::vector<Block> blocks;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t k = blocks.size();
    if (bytes.size() - pos < 4) throw IntegrityError("truncated record length", k);
    const auto len = static_cast<std::size_t>(detail::get_be(bytes.substr(pos), 4));
    pos += 4;
    if (len < kBlockHeaderBytes || bytes.size() - pos < len)
      throw IntegrityError("malformed block record", k);
    std::string_view rec = bytes.substr(pos, len);
    Block b;
    b.index = detail::get_be(rec, 8);
    b.timestamp_ms = static_cast<std::int64_t>(detail::get_be(rec.substr(8), 8));
    std::copy_n(rec.begin() + 16, 32, b.prev_hash.begin());
    std::copy_n(rec.begin() + 48, 32, b.hash.begin());
    b.payload = std::string(rec.substr(kBlockHeaderBytes));
    blocks.push_back(std::move(b));
    pos += len;
  }
  return Chain::from_blocks(std::move(blocks));
}

inline void write_chain(const std::string& path, const Chain& chain) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string bytes = encode_chain(chain);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

/// Appends one block record to an existing chain file.
inline void append_block_file(const std::string& path, const Block& block) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path + " for appending");
  const std::string rec = encode_block(block);
  out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  if (!out) throw std::runtime_error("failed appending to " + path);
}

inline Chain read_chain(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_chain(bytes);
}

}  // namespace mpm
