# Matching / vertex cover module
