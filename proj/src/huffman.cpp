#include "fqzkit/huffman.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace fqzkit {

namespace {

std::vector<uint8_t> build_lengths_once(const std::vector<uint64_t>& freqs) {
    const size_t n = freqs.size();
    std::vector<uint8_t> lengths(n, 0);

    std::vector<size_t> alive;
    for (size_t s = 0; s < n; ++s)
        if (freqs[s] > 0) alive.push_back(s);
    if (alive.empty()) return lengths;
    if (alive.size() == 1) {
        lengths[alive[0]] = 1;
        return lengths;
    }

    // Plain heap Huffman over (freq, node). Node ids increase in creation
    // order and break frequency ties, so the tree shape is deterministic.
    struct Node {
        uint64_t freq;
        size_t id;
        int left = -1, right = -1;
    };
    std::vector<Node> nodes;
    nodes.reserve(alive.size() * 2);
    for (size_t s : alive) nodes.push_back({freqs[s], nodes.size()});

    auto cmp = [&nodes](size_t a, size_t b) {
        if (nodes[a].freq != nodes[b].freq) return nodes[a].freq > nodes[b].freq;
        return nodes[a].id > nodes[b].id;
    };
    std::priority_queue<size_t, std::vector<size_t>, decltype(cmp)> heap(cmp);
    for (size_t i = 0; i < nodes.size(); ++i) heap.push(i);

    while (heap.size() > 1) {
        size_t a = heap.top();
        heap.pop();
        size_t b = heap.top();
        heap.pop();
        nodes.push_back({nodes[a].freq + nodes[b].freq, nodes.size(), int(a), int(b)});
        heap.push(nodes.size() - 1);
    }

    // Depth-first walk assigning leaf depths.
    std::vector<std::pair<size_t, uint8_t>> stack{{heap.top(), 0}};
    while (!stack.empty()) {
        auto [idx, depth] = stack.back();
        stack.pop_back();
        const Node& node = nodes[idx];
        if (node.left < 0) {
            lengths[alive[idx]] = depth;
            continue;
        }
        stack.emplace_back(size_t(node.left), uint8_t(depth + 1));
        stack.emplace_back(size_t(node.right), uint8_t(depth + 1));
    }
    return lengths;
}

} // namespace

std::vector<uint8_t> huffman_code_lengths(const std::vector<uint64_t>& freqs, uint32_t max_len) {
    size_t present = 0;
    for (uint64_t f : freqs) present += f > 0;
    // Flattening can never get below a balanced tree, so an impossible cap
    // would loop forever.
    if (max_len < 64 && present > (1ull << max_len))
        throw std::invalid_argument("length cap cannot fit the alphabet");

    std::vector<uint64_t> scaled = freqs;
    for (;;) {
        std::vector<uint8_t> lengths = build_lengths_once(scaled);
        uint8_t deepest = 0;
        for (uint8_t l : lengths) deepest = std::max(deepest, l);
        if (deepest <= max_len) return lengths;
        // Flatten the distribution and retry; converges to a balanced tree.
        for (uint64_t& f : scaled)
            if (f > 0) f = (f + 1) / 2;
    }
}

std::vector<uint32_t> canonical_codes(const std::vector<uint8_t>& lengths) {
    uint32_t max_len = 0;
    for (uint8_t l : lengths) max_len = std::max<uint32_t>(max_len, l);
    std::vector<uint32_t> codes(lengths.size(), 0);
    if (max_len == 0) return codes;

    std::vector<uint32_t> count(max_len + 1, 0);
    for (uint8_t l : lengths)
        if (l > 0) ++count[l];
    std::vector<uint32_t> next(max_len + 1, 0);
    uint32_t code = 0;
    for (uint32_t l = 1; l <= max_len; ++l) {
        code = (code + count[l - 1]) << 1;
        next[l] = code;
    }
    // Symbol order within a length is ascending, which the length-then-symbol
    // iteration below gives for free.
    for (size_t s = 0; s < lengths.size(); ++s)
        if (lengths[s] > 0) codes[s] = next[lengths[s]]++;
    return codes;
}

HuffmanDecoder::HuffmanDecoder(const std::vector<uint8_t>& lengths) {
    for (uint8_t l : lengths) max_len_ = std::max<uint32_t>(max_len_, l);
    if (max_len_ == 0) throw corruption_error("prefix code table is empty");
    if (max_len_ > 57) throw corruption_error("prefix code length out of range");

    count_.assign(max_len_ + 1, 0);
    uint32_t n_symbols = 0;
    for (uint8_t l : lengths) {
        if (l > 0) {
            ++count_[l];
            ++n_symbols;
        }
    }

    // Kraft sum, scaled by 2^max_len to stay integral.
    uint64_t kraft = 0;
    for (uint32_t l = 1; l <= max_len_; ++l) kraft += uint64_t(count_[l]) << (max_len_ - l);
    bool lone_symbol = n_symbols == 1 && max_len_ == 1;
    if (!lone_symbol && kraft != (uint64_t(1) << max_len_))
        throw corruption_error("prefix code lengths violate Kraft equality");

    first_code_.assign(max_len_ + 1, 0);
    first_sym_.assign(max_len_ + 1, 0);
    uint32_t code = 0, index = 0;
    for (uint32_t l = 1; l <= max_len_; ++l) {
        code = (code + (l > 1 ? count_[l - 1] : 0)) << (l > 1 ? 1 : 0);
        first_code_[l] = code;
        first_sym_[l] = index;
        index += count_[l];
    }
    sorted_.reserve(n_symbols);
    for (uint32_t l = 1; l <= max_len_; ++l)
        for (size_t s = 0; s < lengths.size(); ++s)
            if (lengths[s] == l) sorted_.push_back(uint32_t(s));
}

uint32_t HuffmanDecoder::decode(MsbBitReader& in) const {
    uint32_t code = 0;
    for (uint32_t l = 1; l <= max_len_; ++l) {
        code = (code << 1) | in.bit();
        if (count_[l] > 0 && code >= first_code_[l] && code < first_code_[l] + count_[l])
            return sorted_[first_sym_[l] + (code - first_code_[l])];
    }
    throw corruption_error("invalid prefix code in bit stream");
}

} // namespace fqzkit
