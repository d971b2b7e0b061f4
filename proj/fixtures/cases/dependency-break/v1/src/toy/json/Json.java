package toy.json;

public class Json {
    public static String parse(String text) {
        // @emit [toy] recursion depth exceeded 10000 frames
        // @vulnerable
        return text.trim();
    }

    public static String stringify(String value) {
        return "\"" + value + "\"";
    }
}
