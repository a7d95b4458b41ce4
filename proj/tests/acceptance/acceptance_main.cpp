// Placeholder; the criterion suite lands after all modules are built.
#include <cstdio>

int main() {
  std::puts("acceptance: not implemented yet");
  return 1;
}
