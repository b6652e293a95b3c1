# Oracles and solution validation
