#include "clockrand/aes.hpp"

#include <stdexcept>

namespace clockrand::aes {
namespace {

constexpr std::uint8_t xtime(std::uint8_t x) {
  return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1b : 0x00));
}

constexpr std::uint8_t gmul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  while (b) {
    if (b & 1) p ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return p;
}

constexpr std::uint8_t rotl8(std::uint8_t x, int s) {
  return static_cast<std::uint8_t>((x << s) | (x >> (8 - s)));
}

struct Tables {
  std::array<std::uint8_t, 256> fwd{};
  std::array<std::uint8_t, 256> inv{};
};

// Multiplicative inverse followed by the affine map.
constexpr Tables make_tables() {
  Tables t;
  for (int x = 0; x < 256; ++x) {
    std::uint8_t inverse = 0;
    if (x != 0) {
      for (int y = 1; y < 256; ++y) {
        if (gmul(static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y)) == 1) {
          inverse = static_cast<std::uint8_t>(y);
          break;
        }
      }
    }
    const std::uint8_t s = inverse ^ rotl8(inverse, 1) ^ rotl8(inverse, 2) ^ rotl8(inverse, 3) ^
                           rotl8(inverse, 4) ^ 0x63;
    t.fwd[x] = s;
    t.inv[s] = static_cast<std::uint8_t>(x);
  }
  return t;
}

constexpr Tables kTables = make_tables();
static_assert(kTables.fwd[0x00] == 0x63 && kTables.fwd[0x53] == 0xed);

void sub_bytes(Block& s) {
  for (auto& b : s) b = kTables.fwd[b];
}

void inv_sub_bytes(Block& s) {
  for (auto& b : s) b = kTables.inv[b];
}

void shift_rows(Block& s) {
  const Block in = s;
  for (std::size_t i = 0; i < 16; ++i) s[i] = in[shift_rows_source(i)];
}

void inv_shift_rows(Block& s) {
  const Block in = s;
  for (std::size_t i = 0; i < 16; ++i) s[shift_rows_source(i)] = in[i];
}

void mix_columns(Block& s) {
  for (std::size_t c = 0; c < 4; ++c) {
    std::uint8_t* col = &s[4 * c];
    const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
    col[0] = gmul(a0, 2) ^ gmul(a1, 3) ^ a2 ^ a3;
    col[1] = a0 ^ gmul(a1, 2) ^ gmul(a2, 3) ^ a3;
    col[2] = a0 ^ a1 ^ gmul(a2, 2) ^ gmul(a3, 3);
    col[3] = gmul(a0, 3) ^ a1 ^ a2 ^ gmul(a3, 2);
  }
}

void inv_mix_columns(Block& s) {
  for (std::size_t c = 0; c < 4; ++c) {
    std::uint8_t* col = &s[4 * c];
    const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
    col[0] = gmul(a0, 14) ^ gmul(a1, 11) ^ gmul(a2, 13) ^ gmul(a3, 9);
    col[1] = gmul(a0, 9) ^ gmul(a1, 14) ^ gmul(a2, 11) ^ gmul(a3, 13);
    col[2] = gmul(a0, 13) ^ gmul(a1, 9) ^ gmul(a2, 14) ^ gmul(a3, 11);
    col[3] = gmul(a0, 11) ^ gmul(a1, 13) ^ gmul(a2, 9) ^ gmul(a3, 14);
  }
}

void add_round_key(Block& s, const Block& k) {
  for (std::size_t i = 0; i < 16; ++i) s[i] ^= k[i];
}

constexpr std::array<std::uint8_t, 11> kRcon = {0x00, 0x01, 0x02, 0x04, 0x08, 0x10,
                                                0x20, 0x40, 0x80, 0x1b, 0x36};

// Word w[i] of the schedule occupies bytes 4*(i%4)..+3 of round key i/4.
std::array<std::uint8_t, 4> schedule_core(const std::uint8_t* w, int round) {
  return {static_cast<std::uint8_t>(kTables.fwd[w[1]] ^ kRcon[round]), kTables.fwd[w[2]], kTables.fwd[w[3]],
          kTables.fwd[w[0]]};
}

}  // namespace

std::uint8_t sbox(std::uint8_t x) { return kTables.fwd[x]; }
std::uint8_t inv_sbox(std::uint8_t x) { return kTables.inv[x]; }

KeySchedule expand_key(std::span<const std::uint8_t> key) {
  if (key.size() != 16) throw std::invalid_argument("expand_key: AES-128 key must be 16 bytes");
  KeySchedule ks;
  std::copy(key.begin(), key.end(), ks.round_keys[0].begin());
  for (std::size_t r = 1; r <= kRounds; ++r) {
    const Block& prev = ks.round_keys[r - 1];
    Block& cur = ks.round_keys[r];
    const auto t = schedule_core(&prev[12], static_cast<int>(r));
    for (std::size_t b = 0; b < 4; ++b) cur[b] = prev[b] ^ t[b];
    for (std::size_t i = 4; i < 16; ++i) cur[i] = prev[i] ^ cur[i - 4];
  }
  return ks;
}

Key invert_key_schedule(const Block& last_round_key) {
  Block cur = last_round_key;
  for (std::size_t r = kRounds; r >= 1; --r) {
    Block prev{};
    for (std::size_t i = 15; i >= 4; --i) prev[i] = cur[i] ^ cur[i - 4];
    const auto t = schedule_core(&prev[12], static_cast<int>(r));
    for (std::size_t b = 0; b < 4; ++b) prev[b] = cur[b] ^ t[b];
    cur = prev;
  }
  return cur;
}

RoundTrace encrypt_with_states(std::span<const std::uint8_t> key, const Block& plaintext) {
  const KeySchedule ks = expand_key(key);
  RoundTrace rt;
  Block s = plaintext;
  add_round_key(s, ks.round_keys[0]);
  rt.states[0] = s;
  for (std::size_t r = 1; r <= kRounds; ++r) {
    sub_bytes(s);
    shift_rows(s);
    if (r != kRounds) mix_columns(s);
    add_round_key(s, ks.round_keys[r]);
    rt.states[r] = s;
  }
  rt.ciphertext = s;
  return rt;
}

Block encrypt(const KeySchedule& ks, const Block& plaintext) {
  Block s = plaintext;
  add_round_key(s, ks.round_keys[0]);
  for (std::size_t r = 1; r <= kRounds; ++r) {
    sub_bytes(s);
    shift_rows(s);
    if (r != kRounds) mix_columns(s);
    add_round_key(s, ks.round_keys[r]);
  }
  return s;
}

Block decrypt(const KeySchedule& ks, const Block& ciphertext) {
  Block s = ciphertext;
  add_round_key(s, ks.round_keys[kRounds]);
  for (std::size_t r = kRounds; r >= 1; --r) {
    inv_shift_rows(s);
    inv_sub_bytes(s);
    add_round_key(s, ks.round_keys[r - 1]);
    if (r != 1) inv_mix_columns(s);
  }
  return s;
}

int hamming_distance(const Block& a, const Block& b) {
  int d = 0;
  for (std::size_t i = 0; i < 16; ++i) d += hamming_distance(a[i], b[i]);
  return d;
}

int last_round_hypothesis(const Block& ct, std::size_t byte_pos, int key_guess) {
  if (byte_pos >= 16) throw std::invalid_argument("last_round_hypothesis: byte_pos must be in 0..15");
  if (key_guess < 0 || key_guess > 255) throw std::invalid_argument("last_round_hypothesis: key_guess must be in 0..255");
  // The round-9 byte at pos leaves through SubBytes and ShiftRows to
  // position j = image(pos), where ct[j] = S(s9[pos]) ^ k10[j].
  const std::size_t j = shift_rows_image(byte_pos);
  const auto s9 = kTables.inv[static_cast<std::uint8_t>(ct[j] ^ key_guess)];
  return hamming_distance(ct[byte_pos], s9);
}

std::string to_hex(const Block& b) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(32);
  for (auto v : b) {
    s.push_back(digits[v >> 4]);
    s.push_back(digits[v & 0xf]);
  }
  return s;
}

Block from_hex(std::string_view hex) {
  if (hex.size() != 32) throw std::invalid_argument("expected 32 hex digits, got " + std::to_string(hex.size()));
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
  };
  Block b{};
  for (std::size_t i = 0; i < 16; ++i) b[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return b;
}

}  // namespace clockrand::aes
