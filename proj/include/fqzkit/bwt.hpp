#pragma once

#include <cstdint>
#include <vector>

#include "fqzkit/bytes.hpp"

namespace fqzkit {

// Suffix array over byte data with an implicit sentinel smaller than every
// byte. Linear-time induced sorting; block sizes stay well under 2^31.
std::vector<int32_t> suffix_array(const uint8_t* s, size_t n);

struct BwtBlock {
    Bytes data;           // L column with the sentinel row removed, length n
    uint32_t primary = 0; // row index the sentinel occupied, in [1, n]
};

BwtBlock bwt_forward(const uint8_t* s, size_t n);
Bytes bwt_inverse(const Bytes& data, uint32_t primary);

} // namespace fqzkit
