#include <cstdio>
int main(){ std::puts("escat cli stub"); return 0; }
