#include "fqzkit/bwt.hpp"

#include <algorithm>
#include <array>

#include "fqzkit/errors.hpp"

namespace fqzkit {

namespace {

// SA-IS. Input must end with a unique smallest symbol s[n-1] == 0; all other
// symbols are in [1, K). sa receives the full suffix array of s.
void sais_rec(const int32_t* s, int32_t* sa, int32_t n, int32_t K) {
    if (n == 1) {
        sa[0] = 0;
        return;
    }

    std::vector<bool> is_s(static_cast<size_t>(n));
    is_s[size_t(n - 1)] = true;
    for (int32_t i = n - 2; i >= 0; --i)
        is_s[size_t(i)] =
            s[i] < s[i + 1] || (s[i] == s[i + 1] && is_s[size_t(i + 1)]);
    auto is_lms = [&](int32_t i) {
        return i > 0 && is_s[size_t(i)] && !is_s[size_t(i - 1)];
    };

    std::vector<int32_t> bkt(static_cast<size_t>(K));
    auto bucket_heads = [&] {
        std::fill(bkt.begin(), bkt.end(), 0);
        for (int32_t i = 0; i < n; ++i) ++bkt[size_t(s[i])];
        int32_t sum = 0;
        for (int32_t c = 0; c < K; ++c) {
            int32_t cnt = bkt[size_t(c)];
            bkt[size_t(c)] = sum;
            sum += cnt;
        }
    };
    auto bucket_tails = [&] {
        std::fill(bkt.begin(), bkt.end(), 0);
        for (int32_t i = 0; i < n; ++i) ++bkt[size_t(s[i])];
        int32_t sum = 0;
        for (int32_t c = 0; c < K; ++c) {
            sum += bkt[size_t(c)];
            bkt[size_t(c)] = sum;
        }
    };

    // Induce L-suffixes left to right, then S-suffixes right to left, from
    // whatever LMS placement sa currently holds.
    auto induce = [&] {
        bucket_heads();
        for (int32_t i = 0; i < n; ++i) {
            if (sa[i] > 0 && !is_s[size_t(sa[i] - 1)])
                sa[bkt[size_t(s[sa[i] - 1])]++] = sa[i] - 1;
        }
        bucket_tails();
        for (int32_t i = n - 1; i >= 0; --i) {
            if (sa[i] > 0 && is_s[size_t(sa[i] - 1)])
                sa[--bkt[size_t(s[sa[i] - 1])]] = sa[i] - 1;
        }
    };

    // First pass: LMS suffixes in text order at bucket tails, then induce to
    // get LMS substrings in sorted order.
    std::fill(sa, sa + n, -1);
    bucket_tails();
    for (int32_t i = 1; i < n; ++i)
        if (is_lms(i)) sa[--bkt[size_t(s[i])]] = i;
    induce();

    // Compact sorted LMS positions into the front of sa, then name each LMS
    // substring. Names live in the back half of sa, indexed by pos/2 (LMS
    // positions are never adjacent, so the slots cannot collide).
    int32_t n_lms = 0;
    for (int32_t i = 0; i < n; ++i)
        if (is_lms(sa[i])) sa[n_lms++] = sa[i];
    std::fill(sa + n_lms, sa + n, -1);

    int32_t names = 0;
    int32_t prev = -1;
    for (int32_t i = 0; i < n_lms; ++i) {
        int32_t pos = sa[i];
        bool same = false;
        if (prev >= 0) {
            same = true;
            for (int32_t d = 0;; ++d) {
                if (s[prev + d] != s[pos + d] ||
                    is_s[size_t(prev + d)] != is_s[size_t(pos + d)]) {
                    same = false;
                    break;
                }
                if (d > 0 && (is_lms(prev + d) || is_lms(pos + d))) {
                    same = is_lms(prev + d) && is_lms(pos + d);
                    break;
                }
            }
        }
        if (!same) {
            ++names;
            prev = pos;
        }
        sa[n_lms + pos / 2] = names - 1;
    }

    // Reduced string: LMS names in text order. The last LMS is the sentinel,
    // whose name is the unique smallest, so the recursion invariant holds.
    std::vector<int32_t> reduced(static_cast<size_t>(n_lms));
    for (int32_t i = n - 1, j = n_lms - 1; i >= n_lms; --i)
        if (sa[i] >= 0) reduced[size_t(j--)] = sa[i];
    std::vector<int32_t> lms_text(static_cast<size_t>(n_lms));
    for (int32_t i = 1, j = 0; i < n; ++i)
        if (is_lms(i)) lms_text[size_t(j++)] = i;

    if (names < n_lms) {
        sais_rec(reduced.data(), sa, n_lms, names);
    } else {
        for (int32_t i = 0; i < n_lms; ++i) sa[reduced[size_t(i)]] = i;
    }

    // Map the sorted LMS order back to text positions and induce once more.
    for (int32_t i = 0; i < n_lms; ++i) sa[i] = lms_text[size_t(sa[i])];
    std::fill(sa + n_lms, sa + n, -1);
    bucket_tails();
    for (int32_t i = n_lms - 1; i >= 0; --i) {
        int32_t pos = sa[i];
        sa[i] = -1;
        sa[--bkt[size_t(s[pos])]] = pos;
    }
    induce();
}

} // namespace

std::vector<int32_t> suffix_array(const uint8_t* s, size_t n) {
    if (n == 0) return {};
    // Shift bytes up by one so 0 is free for an explicit sentinel, take the
    // suffix array of the extended string, and drop the sentinel entry.
    std::vector<int32_t> t(n + 1);
    for (size_t i = 0; i < n; ++i) t[i] = int32_t(s[i]) + 1;
    t[n] = 0;
    std::vector<int32_t> sa(n + 1);
    sais_rec(t.data(), sa.data(), int32_t(n + 1), 257);
    return std::vector<int32_t>(sa.begin() + 1, sa.end());
}

BwtBlock bwt_forward(const uint8_t* s, size_t n) {
    BwtBlock out;
    if (n == 0) return out;
    std::vector<int32_t> sa = suffix_array(s, n);
    out.data.reserve(n);
    // Row 0 of the conceptual rotation matrix is the sentinel suffix; its L
    // character is the last byte of the block.
    out.data.push_back(s[n - 1]);
    for (size_t i = 0; i < n; ++i) {
        if (sa[i] == 0) {
            // This row's L character is the sentinel itself. Drop it from the
            // output and remember the row so the inverse can reinsert it.
            out.primary = uint32_t(i + 1);
            continue;
        }
        out.data.push_back(s[size_t(sa[i]) - 1]);
    }
    return out;
}

Bytes bwt_inverse(const Bytes& data, uint32_t primary) {
    const size_t n = data.size();
    if (n == 0) return {};
    if (primary == 0 || primary > n)
        throw corruption_error("BWT primary index out of range");

    // Row r of the full matrix has L character data[r - (r > primary)], with
    // row `primary` holding the sentinel. LF maps a row to the row whose
    // rotation starts one position earlier.
    std::array<uint32_t, 256> count{};
    for (uint8_t b : data) ++count[b];
    std::array<uint32_t, 256> cum{};
    uint32_t sum = 1; // rank 0 belongs to the sentinel
    for (int c = 0; c < 256; ++c) {
        cum[size_t(c)] = sum;
        sum += count[size_t(c)];
    }

    std::vector<uint32_t> lf(n + 1);
    for (size_t i = 0; i <= n; ++i) {
        if (i == uint32_t(primary)) {
            lf[i] = 0;
            continue;
        }
        uint8_t ch = data[i - (i > primary ? 1 : 0)];
        lf[i] = cum[ch]++;
    }

    // Row 0 starts right after the sentinel wraps, i.e. at text position n,
    // so its L character is the last text byte. Walk LF backwards from there.
    Bytes out(n);
    uint32_t r = 0;
    for (size_t k = n; k-- > 0;) {
        if (r == primary)
            throw corruption_error("BWT walk reached the sentinel early");
        out[k] = data[r - (r > primary ? 1 : 0)];
        r = lf[r];
    }
    if (r != primary)
        throw corruption_error("BWT walk did not close its cycle");
    return out;
}

} // namespace fqzkit
