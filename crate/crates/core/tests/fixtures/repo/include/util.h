#pragma once

#include <cstddef>

namespace util {

int trim(char* text);
int countWords(const char* text);
bool startsWith(const char* text, const char* prefix);
unsigned long hashName(const char* name);

template <typename T>
T clampValue(T value, T lo, T hi) {
    return value < lo ? lo : (value > hi ? hi : value);
}

void logLine(int level, const char* message);
void setLevel(int level);
int level();
void flush();

}  // namespace util
