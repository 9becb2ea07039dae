#include "skillforge/rng.hpp"

#include <sstream>

namespace skillforge {

void Rng::save(std::ostream& os) const {
    os << engine_;
}

void Rng::load(std::istream& is) {
    is >> engine_;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view scope, std::uint64_t index) {
    std::uint64_t h = fnv1a64(scope);
    h ^= splitmix64(root);
    h = splitmix64(h ^ splitmix64(index));
    return h;
}

}  // namespace skillforge
