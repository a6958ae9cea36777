#include "illusion/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace illusion::text {

std::string normalize(std::string_view input) {
    std::string out;
    out.reserve(input.size());
    for (unsigned char c : input) {
        if (std::ispunct(c)) continue;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::vector<std::string> tokens(std::string_view input) {
    std::istringstream in(normalize(input));
    std::vector<std::string> out;
    for (std::string word; in >> word;) out.push_back(word);
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view separator) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += separator;
        out += parts[i];
    }
    return out;
}

namespace {

std::vector<std::vector<std::size_t>> distance_table(const std::vector<std::string>& a,
                                                     const std::vector<std::string>& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
        }
    }
    return d;
}

}  // namespace

std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return distance_table(a, b)[a.size()][b.size()];
}

double normalized_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

std::vector<std::pair<std::string, std::string>> token_mismatches(const std::vector<std::string>& expected,
                                                                  const std::vector<std::string>& heard) {
    const auto d = distance_table(expected, heard);
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t i = expected.size(), j = heard.size();
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (expected[i - 1] == heard[j - 1] ? 0 : 1)) {
            if (expected[i - 1] != heard[j - 1]) out.emplace_back(expected[i - 1], heard[j - 1]);
            --i;
            --j;
        } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
            out.emplace_back(expected[i - 1], "");
            --i;
        } else {
            out.emplace_back("", heard[j - 1]);
            --j;
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace illusion::text
