#pragma once

// AES-128 with every round output exposed, plus the Hamming leakage helpers
// used by the trace generator and the last-round CPA.
//
// Byte order: a Block holds the state column-major as in FIPS-197, i.e.
// byte index 4*c + r is row r of column c. ShiftRows moves row r left by r
// columns, so output byte 4*c + r comes from input byte 4*((c + r) % 4) + r.

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace clockrand::aes {

using Block = std::array<std::uint8_t, 16>;
using Key = Block;

inline constexpr std::size_t kRounds = 10;

struct KeySchedule {
  std::array<Block, kRounds + 1> round_keys{};
};

/// states[0] is the initial AddRoundKey output, states[r] the output of
/// round r; states[10] equals the ciphertext.
struct RoundTrace {
  std::array<Block, kRounds + 1> states{};
  Block ciphertext{};
};

KeySchedule expand_key(std::span<const std::uint8_t> key);

/// Recovers the cipher key from the final round key by running the key
/// schedule backwards.
Key invert_key_schedule(const Block& last_round_key);

RoundTrace encrypt_with_states(std::span<const std::uint8_t> key, const Block& plaintext);
Block encrypt(const KeySchedule& ks, const Block& plaintext);
/// Inverse cipher. Kept for verification; nothing in the pipeline decrypts.
Block decrypt(const KeySchedule& ks, const Block& ciphertext);

std::uint8_t sbox(std::uint8_t x);
std::uint8_t inv_sbox(std::uint8_t x);

/// Index of the input byte that ShiftRows moves to `pos`.
constexpr std::size_t shift_rows_source(std::size_t pos) {
  const std::size_t r = pos % 4, c = pos / 4;
  return 4 * ((c + r) % 4) + r;
}

/// Index that ShiftRows moves byte `pos` to; inverse of shift_rows_source.
constexpr std::size_t shift_rows_image(std::size_t pos) {
  const std::size_t r = pos % 4, c = pos / 4;
  return 4 * ((c + 4 - r) % 4) + r;
}

constexpr int hamming_weight(std::uint8_t v) { return std::popcount(v); }
constexpr int hamming_distance(std::uint8_t a, std::uint8_t b) { return std::popcount(static_cast<std::uint8_t>(a ^ b)); }
int hamming_distance(const Block& a, const Block& b);

/// Hamming distance between register byte `byte_pos` before and after the
/// final round: HD(ct[pos], InvSBox(ct[shift_rows_image(pos)] ^ key_guess)).
/// The guess is for byte shift_rows_image(pos) of the last round key.
int last_round_hypothesis(const Block& ct, std::size_t byte_pos, int key_guess);

/// Lowercase hex, 32 characters.
std::string to_hex(const Block& b);
/// Parses 32 hex digits (either case). Throws std::invalid_argument.
Block from_hex(std::string_view hex);

}  // namespace clockrand::aes
