#include <cstdio>

int main() {
  std::puts("cavityrc: CLI under construction");
  return 2;
}
