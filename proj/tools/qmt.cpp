#include <iostream>

int main() {
  std::cout << "qmt cli placeholder\n";
  return 0;
}
