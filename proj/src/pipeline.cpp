// p
