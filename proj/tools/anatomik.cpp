// Placeholder while modules come up; the full CLI lands with the io layer.
#include <cstdio>

int main() {
  std::puts("anatomik: not wired yet");
  return 1;
}
