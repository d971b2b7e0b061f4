package toy.re;

public class Matcher {
    public static boolean matches(String pattern, String input) {
        // @emit [toy] backtracking limit reached
        // @vulnerable
        return false;
    }
}
