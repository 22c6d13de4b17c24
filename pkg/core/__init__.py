"""
Projeto fail-safe de amortecedores viscosos lineares: dinâmica de Newmark,
restrições de drift agregadas, gradientes adjuntos e otimização SLP com
working-set sobre cenários de falha
"""
