#pragma once

#include <cstdint>
#include <vector>

#include "fqzkit/bytes.hpp"

namespace fqzkit {

// Registered stream codecs, cheapest tier first. The numeric ids are wire
// values and must never be reused for a different algorithm; retire ids and
// bump the registry version instead.
enum class CodecId : uint8_t {
    store = 0,
    rle = 1,
    fast_general = 2, // deflate
    strong_bwt = 3,   // block sort + MTF + zero-run coding + prefix codes
    strong_cm = 4,    // bitwise context mixing with arithmetic coding
};

constexpr uint32_t kCodecRegistryVersion = 1;
constexpr unsigned kCodecCount = 5;

struct CodecSpec {
    CodecId id = CodecId::store;
    // Backend tuning knob, stored in the low nibble of the codec byte. Only
    // fast_general interprets it (deflate level, 0 means the default 6).
    uint8_t level = 0;

    bool operator==(const CodecSpec&) const = default;
};

const char* codec_name(CodecId id);

// The CodecSpec entries select_plan trials, in tier order.
const std::vector<CodecSpec>& codec_registry();

// Codec byte as stored in chunk headers: id in the high nibble, level in the
// low nibble.
uint8_t pack_codec(CodecSpec spec);
CodecSpec unpack_codec(uint8_t byte);

// Encode raw with the given codec. Empty input encodes to empty output under
// every codec; otherwise non-store codecs prefix their payload with
// varint(raw size) so decoding is self-describing.
Bytes encode_stream(const Bytes& raw, CodecSpec spec);
Bytes decode_stream(const Bytes& coded, CodecSpec spec);

// Encode, falling back to store when the coded form is not smaller than the
// input. spec is rewritten to whatever was actually used.
Bytes maybe_encode(const Bytes& raw, CodecSpec& spec);

// Selection score: compression ratio discounted by estimated time cost,
// s = cr / (1 + 0.1 * t).
double codec_score(double compression_ratio, double time_cost);

// One codec choice per field stream of a chunk.
using FieldPlan = std::vector<CodecSpec>;

// Trial every registry codec on one field and keep the best scorer; ties go
// to the cheaper tier. Deterministic for a fixed input.
CodecSpec choose_codec(const Bytes& raw);
FieldPlan select_plan(const std::vector<Bytes>& fields);

} // namespace fqzkit
