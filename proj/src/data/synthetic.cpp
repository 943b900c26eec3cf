// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/data/synthetic.h"

#include <array>
#include <random>
#include <string_view>
#include <vector>

namespace sharp::data {

namespace {

constexpr std::array<std::string_view, 48> kNouns{
    "river", "garden", "window", "teacher", "farmer", "market", "letter", "bridge", "forest", "village",
    "candle", "basket", "mountain", "child", "doctor", "wagon", "harbor", "lantern", "kitchen", "sailor",
    "painter", "orchard", "library", "meadow", "storm", "tower", "merchant", "soldier", "school", "field",
    "stone", "horse", "bottle", "clock", "engine", "island", "mirror", "pocket", "ribbon", "shadow",
    "ladder", "castle", "valley", "blanket", "station", "kettle", "journal", "fountain"};
constexpr std::array<std::string_view, 24> kAdjectives{
    "old", "quiet", "bright", "small", "heavy", "gentle", "narrow", "golden", "cold", "busy", "tired", "clever",
    "broken", "silver", "green", "distant", "warm", "patient", "hidden", "early", "simple", "crowded", "soft", "plain"};
constexpr std::array<std::string_view, 28> kVerbs{
    "carried", "found", "painted", "watched", "repaired", "visited", "opened", "followed", "counted", "cleaned",
    "described", "borrowed", "climbed", "crossed", "remembered", "sold", "built", "measured", "noticed", "closed",
    "filled", "lifted", "guarded", "studied", "washed", "ordered", "collected", "carved"};
constexpr std::array<std::string_view, 12> kAdverbs{
    "slowly", "carefully", "at dawn", "before noon", "again", "in silence", "with care", "every morning",
    "after the rain", "without a word", "once more", "late at night"};
constexpr std::array<std::string_view, 16> kColors{
    "red", "blue", "amber", "violet", "white", "black", "orange", "gray",
    "teal", "brown", "crimson", "ivory", "olive", "indigo", "scarlet", "pale yellow"};
constexpr std::array<std::string_view, 16> kFoods{
    "barley bread", "plum soup", "roasted corn", "goat cheese", "apple cake", "fish stew", "rice pudding",
    "onion pie", "honey bread", "bean soup", "salted fish", "pear tart", "lentil stew", "cabbage rolls",
    "walnut cake", "mint tea"};
constexpr std::array<std::string_view, 10> kTrades{"teacher", "farmer", "doctor", "sailor", "painter",
                                                    "merchant", "baker", "weaver", "clerk", "potter"};
constexpr std::array<std::string_view, 14> kSyllables{"ka", "lo", "mir", "ten", "sa", "vor", "el", "din",
                                                       "ru", "ba", "ost", "ney", "tal", "qui"};

struct Person {
    std::string name;
    std::string city;
    std::string_view color;
    std::string_view food;
    std::string_view trade;
};

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::string word(std::mt19937_64& rng, std::size_t syllables) {
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) w += kSyllables[pick(rng, kSyllables.size())];
    return capitalize(w);
}

template <std::size_t N>
std::string_view any(std::mt19937_64& rng, const std::array<std::string_view, N>& a) {
    return a[pick(rng, N)];
}

std::string sentence(std::mt19937_64& rng, const Person& p, const std::vector<std::string>& cities) {
    std::string s;
    switch (pick(rng, 9)) {
        case 0:
            s = p.name + " lives in " + p.city + ".";
            break;
        case 1:
            s = "The favorite color of " + p.name + " is " + std::string(p.color) + ".";
            break;
        case 2:
            s = p.name + " likes to eat " + std::string(p.food) + ".";
            break;
        case 3:
            s = p.name + " works as a " + std::string(p.trade) + " in " + p.city + ".";
            break;
        case 4:
            s = p.name + " " + std::string(any(rng, kVerbs)) + " the " + std::string(any(rng, kAdjectives)) + " " +
                std::string(any(rng, kNouns)) + " " + std::string(any(rng, kAdverbs)) + ".";
            break;
        case 5:
            s = "The " + std::string(any(rng, kAdjectives)) + " " + std::string(any(rng, kNouns)) + " " +
                std::string(any(rng, kVerbs)) + " the " + std::string(any(rng, kNouns)) + " near the " +
                std::string(any(rng, kNouns)) + ".";
            break;
        case 6:
            s = "In " + cities[pick(rng, cities.size())] + ", a " + std::string(any(rng, kAdjectives)) + " " +
                std::string(any(rng, kNouns)) + " " + std::string(any(rng, kVerbs)) + " a " +
                std::string(any(rng, kNouns)) + ".";
            break;
        case 7:
            s = "When " + p.name + " visited " + cities[pick(rng, cities.size())] + ", the " +
                std::string(any(rng, kNouns)) + " was " + std::string(any(rng, kAdjectives)) + ".";
            break;
        default:
            s = "Everyone in " + p.city + " knows that " + p.name + " wears " + std::string(p.color) + ".";
            break;
    }
    return s;
}

}  // namespace

std::string synthetic_corpus(std::size_t min_bytes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> cities;
    for (int i = 0; i < 24; ++i) cities.push_back(word(rng, 3));
    std::vector<Person> people;
    for (int i = 0; i < 96; ++i) {
        Person p;
        p.name = word(rng, 2) + " " + word(rng, 2);
        p.city = cities[pick(rng, cities.size())];
        p.color = any(rng, kColors);
        p.food = any(rng, kFoods);
        p.trade = any(rng, kTrades);
        people.push_back(std::move(p));
    }
    std::string out;
    while (out.size() < min_bytes) {
        const Person& p = people[pick(rng, people.size())];
        const std::size_t n = 3 + pick(rng, 5);
        std::string para;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) para += ' ';
            para += sentence(rng, p, cities);
        }
        out += para;
        out += "\n\n";
    }
    return out;
}

}  // namespace sharp::data
