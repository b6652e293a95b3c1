# Arboricity MIS module
