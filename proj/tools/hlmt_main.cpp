#include <cstdio>

int main() {
  std::puts("hlmt: placeholder");
  return 0;
}
